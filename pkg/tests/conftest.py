import pytest

from helpsolve.analysis import AdmissibleCache
from helpsolve.chartab import bundled_dataset

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def m22():
    return bundled_dataset()


@pytest.fixture(scope="session")
def cache(m22):
    return AdmissibleCache(m22)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
