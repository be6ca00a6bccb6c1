import io
import json
import subprocess
import sys

import pytest

from helpsolve.analysis import bundled_expected
from helpsolve.cli import FAIL, OK, USAGE, main


def run(*argv, env=None):
    out = io.StringIO()
    code = main(list(argv), env or {}, out)
    return code, out.getvalue()


def test_check_order_7():
    code, text = run("check-order", "7")
    assert code == OK
    lines = text.splitlines()
    assert lines[0] == "order 7: 4 solutions over 1 case (not all trivial)"
    assert len(lines) == 6


def test_check_order_77():
    code, text = run("check-order", "77")
    assert code == OK
    assert text.startswith("order 77: eliminated (0 solutions over 40 cases)")


def test_check_order_9_is_usage_error(capsys):
    code, _ = run("check-order", "9")
    assert code == USAGE
    assert "9 does not divide exp(G) = 9240" in capsys.readouterr().err


def test_bad_arguments():
    assert run("check-order")[0] == USAGE
    assert run("no-such-command")[0] == USAGE
    assert run("--workers", "0", "spectrum")[0] == USAGE


def test_json_output_round_trips():
    code, text = run("check-order", "8", "--format", "json")
    assert code == OK
    doc = json.loads(text)
    assert len(doc["solutions"]) == 76
    assert json.dumps(doc, indent=2, sort_keys=True) + "\n" == text


def test_csv_output():
    code, text = run("--format", "csv", "check-order", "4")
    lines = text.splitlines()
    assert lines[0] == "2a,4a,4b"
    assert {tuple(map(int, r.split(","))) for r in lines[1:]} == bundled_expected(4).rows


def test_env_overrides_and_flag_precedence():
    code, text = run("check-order", "7", env={"HELPSOLVE_FORMAT": "csv"})
    assert text.splitlines()[0] == "7a,7b"
    code, text = run("check-order", "7", "--format", "text", env={"HELPSOLVE_FORMAT": "csv"})
    assert text.startswith("order 7:")
    assert run("check-order", "7", env={"HELPSOLVE_WORKERS": "many"})[0] == USAGE


def test_timing_goes_to_stderr(capsys):
    code, text = run("check-order", "5", env={"HELPSOLVE_TIMING": "1"})
    assert "wall time" not in text
    assert "wall time" in capsys.readouterr().err


def test_dump_constraints():
    code, text = run("dump-constraints", "4")
    assert code == OK
    assert "(1/4)(10*v2a + 2*v4a + 2*v4b + 26) >= 0 in Z    [mu(l=0, chi_2, p=*)]" in text
    code, text = run("dump-constraints", "77", "--case", "39")
    assert "# order 77, case 39 of 40" in text
    assert run("dump-constraints", "77", "--case", "40")[0] == USAGE


def test_kimmerle():
    code, text = run("kimmerle")
    assert code == OK
    assert text == "PASS: vertices {2,3,5,7,11}, edges {(2,3)} on both sides\n"


def test_verify_bundled_order():
    code, text = run("verify", "--order", "8")
    assert code == OK
    assert text == "PASS order 8: 76 tuples\n"


def test_verify_reports_diff(tmp_path):
    exp = bundled_expected(7)
    path = tmp_path / "order07.txt"
    rows = sorted(exp.rows)[1:] + [(3, -2)]
    path.write_text("# order 7\n# classes 7a,7b\n" + "".join(f"{a},{b}\n" for a, b in rows))
    code, text = run("verify", "--expected", str(path))
    assert code == FAIL
    assert text.splitlines() == ["FAIL order 7: 1 missing, 1 extra", "  - 3,-2", "  + -1,2"]


def test_verify_needs_an_order(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("1,0\n")
    assert run("verify", "--expected", str(path))[0] == USAGE
    assert run("verify", "--expected", str(path), "--order", "7")[0] == FAIL


def test_missing_or_corrupt_dataset(tmp_path):
    assert run("--dataset", str(tmp_path / "none.json"), "kimmerle")[0] == USAGE
    bad = tmp_path / "bad.json"
    bad.write_text('{"group": {}}')
    assert run("--dataset", str(bad), "kimmerle")[0] == USAGE


def test_order_24_needs_a_budget(capsys):
    assert run("check-order", "24")[0] == USAGE
    assert "45194160 cases" in capsys.readouterr().err


def test_order_24_budgeted_stream(tmp_path):
    ckpt = tmp_path / "c24.json"
    code, text = run("check-order", "24", "--budget-cases", "5", "--checkpoint", str(ckpt))
    assert code == OK
    assert text.splitlines()[-1].startswith("order 24: stopped by case budget after 5/45194160 cases")
    code, text = run("check-order", "24", "--budget-cases", "5", "--checkpoint", str(ckpt), "--format", "json")
    assert json.loads(text)["cases_done"] == 10
    assert json.loads(ckpt.read_text())["cases_done"] == 10


@pytest.mark.slow
def test_spectrum_text():
    code, text = run("spectrum")
    assert code == OK
    assert "# element orders: {1, 2, 3, 4, 5, 6, 7, 8, 11}" in text
    assert "# open: {12, 24}" in text


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "helpsolve", "check-order", "3"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("order 3: 1 solutions over 1 case (all trivial)")
