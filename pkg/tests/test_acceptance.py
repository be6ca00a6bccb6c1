"""Acceptance criteria 1-12, each reported as one PASS/FAIL line in the
terminal summary."""

import io
import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from helpsolve.analysis import (
    ELEMENT_ORDER,
    ELIMINATED,
    AdmissibleCache,
    _case_at,
    bundled_expected,
    prime_graph_G,
    prime_graph_VZG,
    run_budgeted,
    spectrum,
)
from helpsolve.chartab import validate_orthogonality
from helpsolve.cli import main
from helpsolve.help_core import SystemBuilder, divisors, indicator
from helpsolve.solver import brute_force, classify_trivial, enumerate_solutions, propagate_bounds

from reference_forms import mismatches
from test_cyclotomic import check_laws, random_cases


@contextmanager
def criterion(log, n, title, limit=None):
    """Time the block and append its PASS/FAIL line; a runtime over
    ``limit`` seconds fails the criterion."""
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        secs = time.perf_counter() - start
        if ok and limit is not None and secs >= limit:
            ok = False
            title += f" (over the {limit:g} s limit)"
        log.append(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {title} [{secs:.2f} s]")
    assert ok, f"criterion {n} took {secs:.2f} s, limit {limit} s"


def expected_rows(k):
    return bundled_expected(k).rows


def test_criterion_01_prime_orders(m22, acceptance_log):
    with criterion(acceptance_log, 1, "orders 2, 3, 5 admit only the class indicator", 1):
        cache = AdmissibleCache(m22)
        for k, cls in ((2, "2a"), (3, "3a"), (5, "5a")):
            sol = cache.get(k)
            assert sol.rows() == [indicator(m22, k, cls).values]
            assert classify_trivial({1: sol.tuples[0]})


def test_criterion_02_order_4(m22, acceptance_log):
    with criterion(acceptance_log, 2, "order 4 gives the 34 listed triples", 5):
        sol = AdmissibleCache(m22).get(4)
        assert set(sol.rows()) == expected_rows(4) and len(sol) == 34


def test_criterion_03_order_6(m22, acceptance_log):
    with criterion(acceptance_log, 3, "order 6 gives the 15 listed triples", 5):
        sol = AdmissibleCache(m22).get(6)
        assert set(sol.rows()) == expected_rows(6) and len(sol) == 15


def test_criterion_04_orders_7_and_11(m22, acceptance_log):
    with criterion(acceptance_log, 4, "orders 7 and 11 give the 4 and 10 listed pairs", 5):
        cache = AdmissibleCache(m22)
        for k, n in ((7, 4), (11, 10)):
            sol = cache.get(k)
            assert set(sol.rows()) == expected_rows(k) and len(sol) == n


def test_criterion_05_eliminated_orders(m22, acceptance_log):
    counts = {10: 1, 14: 4, 15: 1, 21: 4, 22: 10, 33: 10, 35: 4, 55: 10, 77: 40}
    with criterion(acceptance_log, 5, "orders 10-77 empty in every case, case counts match", 30):
        cache = AdmissibleCache(m22)
        for k, n in counts.items():
            res = cache.result(k)
            assert not res.solutions, k
            assert res.case_count == n, (k, res.case_count)


def test_criterion_06_order_8(m22, acceptance_log):
    with criterion(acceptance_log, 6, "order 8 gives the 76 listed quadruples over 34 cases", 60):
        res = AdmissibleCache(m22).result(8)
        assert res.case_count == 34
        assert set(res.solutions.rows()) == expected_rows(8) and len(res.solutions) == 76


def test_criterion_07_order_12(m22, acceptance_log):
    with criterion(acceptance_log, 7, "order 12 gives the 1166 listed tuples over 510 cases (4 workers)", 600):
        res = AdmissibleCache(m22, workers=4).result(12)
        assert res.case_count == 510
        assert len(expected_rows(12)) == 1166
        assert set(res.solutions.rows()) == expected_rows(12)


def test_criterion_08_spectrum(m22, cache, acceptance_log):
    with criterion(acceptance_log, 8, "spectrum leaves exactly {12, 24} open"):
        status = spectrum(m22, cache)
        assert set(status) == set(divisors(m22.exponent))
        still_open = {k for k, s in status.items() if s not in (ELEMENT_ORDER, ELIMINATED)}
        assert still_open == {12, 24}
        assert {k for k, s in status.items() if s == ELEMENT_ORDER} == m22.element_orders()
        out = io.StringIO()
        assert main(["spectrum"], {}, out) == 0
        assert "# open: {12, 24}" in out.getvalue()


def test_criterion_09_kimmerle(m22, cache, acceptance_log):
    with criterion(acceptance_log, 9, "prime graphs of G and V(ZG) agree"):
        g, v = prime_graph_G(m22), prime_graph_VZG(m22, cache)
        assert g == v
        assert g.vertices == {2, 3, 5, 7, 11} and g.edges == {(2, 3)}
        out = io.StringIO()
        assert main(["kimmerle"], {}, out) == 0
        assert out.getvalue() == "PASS: vertices {2,3,5,7,11}, edges {(2,3)} on both sides\n"


def test_criterion_10_printed_forms(m22, acceptance_log):
    with criterion(acceptance_log, 10, "generated forms reproduce every printed coefficient"):
        assert mismatches(m22) == []


def _systems(m22, cache, k):
    b = SystemBuilder(m22, k)
    pools = cache.pools(k)
    if not all(pools):
        return
    total = cache.case_count(k)
    for i in range(total):
        yield b, b.build(_case_at(k, [list(p) for p in pools], i))


def test_criterion_11_property_suites(m22, cache, acceptance_log):
    with criterion(acceptance_log, 11, "cyclotomic laws, mu-sum identity, solver oracle, dataset checks"):
        assert all(check_laws(a, b, j) for a, b, j in random_cases(2024, 10**4))

        for k in divisors(m22.exponent)[1:]:
            if not 0 < cache.case_count(k) <= 10**4:
                continue
            b = SystemBuilder(m22, k)
            degrees = k * np.array([ch.degree for ch in b.chars])
            pools = [list(p) for p in cache.pools(k)]
            for i in range(cache.case_count(k)):
                lin, const = b.raw_forms(_case_at(k, pools, i))
                assert (lin.sum(axis=1) == 0).all()
                assert (const.sum(axis=1) == degrees).all()

        for k in (d for d in divisors(m22.exponent)[1:] if d <= 12):
            for _, sys_ in _systems(m22, cache, k):
                box = propagate_bounds(sys_)
                assert enumerate_solutions(sys_, box) == brute_force(sys_, box)

        assert sum(c.size for c in m22.classes) == 443520
        assert sum(ch.degree**2 for ch in m22.ordinary) == 443520
        assert validate_orthogonality(m22).ok
        for c in m22.classes:
            for e in divisors(m22.exponent):
                img = m22.power(c.name, e)
                assert m22.order_of(img) == c.element_order // np.gcd(c.element_order, e)


def test_criterion_12_order_24_budgeted(m22, cache, tmp_path, acceptance_log):
    with criterion(acceptance_log, 12, "order 24 budgeted run streams, checkpoints and stops cleanly"):
        ckpt = tmp_path / "order24.json"
        out = io.StringIO()
        first = run_budgeted(24, m22, cache, max_cases=200, checkpoint=ckpt, stream=out, checkpoint_every=50)
        assert first.stop_reason == "case budget" and first.cases_done == 200
        assert json.loads(ckpt.read_text())["cases_done"] == 200
        assert {tuple(map(int, x.split(","))) for x in out.getvalue().splitlines()} == first.solutions

        second = run_budgeted(24, m22, cache, max_secs=1.0, checkpoint=ckpt)
        assert second.stop_reason == "time budget"
        assert second.cases_done > 200
        assert json.loads(ckpt.read_text())["cases_done"] == second.cases_done
        assert first.solutions <= second.solutions
        assert not second.complete
