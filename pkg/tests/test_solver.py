import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpsolve import _kernels
from helpsolve.analysis import _case_at, bundled_expected
from helpsolve.help_core import AugTuple, ConstraintSystem, SystemBuilder, iter_cases
from helpsolve.solver import (
    Box,
    BoxTooLarge,
    SolutionSet,
    Unbounded,
    brute_force,
    classify_trivial,
    enumerate_solutions,
    propagate_bounds,
    verify_point,
)

from reference_forms import make_case


def all_systems(m22, cache, k, step=1):
    b = SystemBuilder(m22, k)
    pools = [list(cache.get(k // d)) for d in b.proper]
    if any(not p for p in pools):
        return
    total = int(np.prod([len(p) for p in pools])) if pools else 1
    for i in range(0, total, step):
        yield b.build(_case_at(k, pools, i))


def small_system(variables, rows, upper=None):
    """Signed rows given as (coefficients, constant)."""
    A = np.array([r[0] for r in rows], dtype=np.int64).reshape(len(rows), len(variables))
    b = np.array([r[1] for r in rows], dtype=np.int64)
    upper = np.array(upper if upper is not None else [10**6] * len(rows), dtype=np.int64)
    return ConstraintSystem(
        1, variables, A, b, np.ones(len(rows), dtype=np.int64), np.ones(len(rows), bool), upper, ["r"] * len(rows)
    )


def test_box_basics():
    box = Box.of(("a", "b"), [(0, 2), (-1, 1)])
    assert box.size() == 9
    assert box.contains((2, -1))
    assert not box.contains((3, 0))
    assert Box.of(("a",), [(2, 1)]).is_empty()
    assert box.widen(1).contains_box(box)
    assert str(box) == "[0,2] x [-1,1]"
    with pytest.raises(ValueError):
        Box(("a",), (2,), (1,))


def test_equality_only_single_variable():
    sys_ = small_system(("x",), [])
    box = propagate_bounds(sys_)
    assert (box.lo, box.hi) == ((1,), (1,))
    assert enumerate_solutions(sys_, box).rows() == [(1,)]


def test_unbounded_system_raises():
    sys_ = small_system(("x", "y"), [])
    with pytest.raises(Unbounded):
        propagate_bounds(sys_)


def test_order_4_box_contains_known_solutions(m22, cache):
    (sys_,) = all_systems(m22, cache, 4)
    box = propagate_bounds(sys_)
    rows = bundled_expected(4).rows
    assert all(box.contains(r) for r in rows)
    assert box.contains_box(Box.of(sys_.variables, [(-2, 2), (-6, 6), (-5, 7)]))


def test_order_7_and_order_2(m22, cache):
    (sys7,) = all_systems(m22, cache, 7)
    assert set(enumerate_solutions(sys7).rows()) == {(0, 1), (2, -1), (1, 0), (-1, 2)}
    (sys2,) = all_systems(m22, cache, 2)
    assert enumerate_solutions(sys2).rows() == [(1,)]


def test_order_14_every_case_empty(m22, cache):
    systems = list(all_systems(m22, cache, 14))
    assert len(systems) == 4
    assert all(not enumerate_solutions(s) for s in systems)


def test_order_10_box_then_empty(m22, cache):
    (sys_,) = all_systems(m22, cache, 10)
    box = propagate_bounds(sys_)
    assert box.is_empty() or not enumerate_solutions(sys_, box)


def test_order_11_brute_force_on_fixed_box(m22, cache):
    (sys_,) = all_systems(m22, cache, 11)
    got = brute_force(sys_, Box.of(sys_.variables, [(-10, 10), (-10, 10)]))
    assert set(got.rows()) == bundled_expected(11).rows
    assert len(got) == 10


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6, 7, 8, 10, 11, 14, 15, 21, 22, 33, 35, 55, 77])
def test_oracle_equivalence(m22, cache, k):
    for sys_ in all_systems(m22, cache, k):
        box = propagate_bounds(sys_)
        assert enumerate_solutions(sys_, box) == brute_force(sys_, box)


def test_oracle_equivalence_order_12_sample(m22, cache):
    for sys_ in all_systems(m22, cache, 12, step=37):
        box = propagate_bounds(sys_)
        assert enumerate_solutions(sys_, box) == brute_force(sys_, box)


@pytest.mark.parametrize("k", [4, 6, 8])
def test_enlarging_the_box_changes_nothing(m22, cache, k):
    for sys_ in all_systems(m22, cache, k, step=5):
        box = propagate_bounds(sys_)
        assert enumerate_solutions(sys_, box.widen(3)) == enumerate_solutions(sys_, box)


def test_determinism(m22, cache):
    (sys_,) = all_systems(m22, cache, 6)
    a = enumerate_solutions(sys_)
    b = enumerate_solutions(sys_)
    assert a == b
    assert a.rows() == sorted(a.rows())


@pytest.mark.parametrize("k", [4, 8])
def test_even_2a_for_2_power_orders(m22, cache, k):
    for sys_ in all_systems(m22, cache, k):
        for t in enumerate_solutions(sys_):
            e = t.entries
            assert e["2a"] % 2 == 0
            if k == 8:
                assert (e["4a"] + e["4b"]) % 2 == 0


def test_verify_point_rejects_violations(m22, cache):
    (sys_,) = all_systems(m22, cache, 4)
    assert verify_point(sys_, (0, 1, 0))
    assert not verify_point(sys_, (1, 1, 0))
    assert not verify_point(sys_, (1, 0, 0))
    assert not verify_point(sys_, (3, -1, -1))


def test_brute_force_guards(m22, cache):
    (sys_,) = all_systems(m22, cache, 4)
    assert not brute_force(sys_, Box.empty(sys_.variables))
    with pytest.raises(BoxTooLarge):
        brute_force(sys_, Box.of(sys_.variables, [(-10**5, 10**5)] * 3))


def test_classify_trivial():
    t3 = AugTuple(3, ("3a",), (1,))
    assert classify_trivial({1: t3})
    bad = AugTuple(4, ("2a", "4a", "4b"), (-2, -1, 4))
    assert not classify_trivial({1: bad, 2: AugTuple(2, ("2a",), (1,))})
    good = AugTuple(4, ("2a", "4a", "4b"), (0, 1, 0))
    assert classify_trivial({1: good, 2: AugTuple(2, ("2a",), (1,))})


def test_solution_set_union_is_sorted_and_commutative():
    a = SolutionSet.from_rows(7, ("7a", "7b"), [(2, -1), (0, 1)])
    b = SolutionSet.from_rows(7, ("7a", "7b"), [(1, 0), (0, 1)])
    assert a.union(b) == b.union(a)
    assert a.union(b).rows() == [(0, 1), (1, 0), (2, -1)]
    with pytest.raises(ValueError):
        SolutionSet(7, ("7a", "7b"), (AugTuple(7, ("7a", "7b"), (1, 0)), AugTuple(7, ("7a", "7b"), (0, 1))))


@st.composite
def bounded_systems(draw):
    """Random signed systems made bounded by explicit box rows; every upper
    bound is the true maximum over that box, so it is implied."""
    n = draw(st.integers(1, 4))
    c = draw(st.integers(1, 6))
    variables = tuple(f"x{i}" for i in range(n))
    rows, uppers = [], []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        rows += [(e, c), ([-x for x in e], c)]
        uppers += [2 * c, 2 * c]
    for _ in range(draw(st.integers(0, 5))):
        coeffs = draw(st.lists(st.integers(-5, 5), min_size=n, max_size=n))
        const = draw(st.integers(-10, 30))
        rows.append((coeffs, const))
        uppers.append(sum(abs(a) * c for a in coeffs) + const)
    mods = [draw(st.sampled_from([1, 1, 2, 3])) for _ in rows]
    A = np.array([r[0] for r in rows], dtype=np.int64)
    b = np.array([r[1] for r in rows], dtype=np.int64)
    return ConstraintSystem(
        1, variables, A, b, np.array(mods), np.ones(len(rows), bool), np.array(uppers), ["r"] * len(rows)
    )


@settings(max_examples=150, deadline=None)
@given(bounded_systems())
def test_random_systems_match_brute_force(sys_):
    box = propagate_bounds(sys_)
    c = int(sys_.b[0])
    wide = Box.of(sys_.variables, [(-c, c)] * len(sys_.variables))
    expected = brute_force(sys_, wide)
    assert enumerate_solutions(sys_, box) == expected
    assert all(box.contains(r) for r in expected.rows())


def _reduced_args(sys_):
    from helpsolve.solver import _reduced

    box = propagate_bounds(sys_)
    return None if box.is_empty() else _reduced(sys_, box)


@pytest.mark.parametrize("k", [4, 6, 8, 12])
def test_kernel_backends_agree(m22, cache, k):
    for sys_ in all_systems(m22, cache, k, step=23):
        args = _reduced_args(sys_)
        if args is None:
            continue
        A, b, lower, upper, modulus, lo, hi = args
        li, ui = _kernels._clip_bounds(lower, upper)
        got_np = _kernels._dfs_np(A, b, li, ui, modulus, lo, hi)
        got = _kernels.dfs_enumerate(A, b, lower, upper, modulus, lo, hi)
        assert np.array_equal(got_np, got)
        start_lo = np.full(A.shape[1], -np.inf)
        start_hi = np.full(A.shape[1], np.inf)
        p_np = _kernels._propagate_np(A, b, lower, upper, start_lo, start_hi, 1000)
        p = _kernels.propagate(A, b, lower, upper, start_lo, start_hi)
        assert p_np[2] == p[2]
        assert np.array_equal(p_np[0], p[0]) and np.array_equal(p_np[1], p[1])


def test_dfs_buffer_regrows():
    # 3 free variables in [0, 19]: 8000 points, beyond the initial buffer
    A = np.zeros((0, 3), dtype=np.int64)
    z = np.zeros(0)
    pts = _kernels.dfs_enumerate(A, np.zeros(0, np.int64), z, z, np.zeros(0, np.int64), np.zeros(3, np.int64), np.full(3, 19))
    assert pts.shape == (8000, 3)
    assert np.array_equal(pts[0], [0, 0, 0]) and np.array_equal(pts[-1], [19, 19, 19])


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, HELPSOLVE_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from helpsolve import _kernels; print(_kernels.backend())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_case_builder_helper(m22):
    assert make_case(m22, 12, {2: (0, 0, 1), 3: (0, 1, 0)}).choices[4].values == (1,)
