"""Hot loops of the solver: bound propagation and depth-first enumeration.

Each kernel exists twice, a numba ``@njit`` version and a pure numpy version.
The numba path is used when numba imports and ``HELPSOLVE_DISABLE_NUMBA`` is
unset (or "0"); both paths return identical results.

Row convention shared by every kernel: for row i the value
``v_i = A[i] . x + b[i]`` must satisfy ``lower[i] <= v_i <= upper[i]`` and
``v_i % modulus[i] == 0``.  Bounds are float64 so that +-inf can mark a
missing side; every finite bound is an integer well inside 2**53.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("HELPSOLVE_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


BIG = 2**62


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# bound propagation


@njit(cache=True)
def _propagate_nb(A, b, lower, upper, lo, hi, max_rounds):
    m, n = A.shape
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(max_rounds):
        changed = False
        for i in range(m):
            # min/max of the row value, counting infinite contributions apart
            fmin = 0.0
            fmax = 0.0
            nmin = 0
            nmax = 0
            for j in range(n):
                a = A[i, j]
                if a > 0:
                    if lo[j] == -np.inf:
                        nmin += 1
                    else:
                        fmin += a * lo[j]
                    if hi[j] == np.inf:
                        nmax += 1
                    else:
                        fmax += a * hi[j]
                elif a < 0:
                    if hi[j] == np.inf:
                        nmin += 1
                    else:
                        fmin += a * hi[j]
                    if lo[j] == -np.inf:
                        nmax += 1
                    else:
                        fmax += a * lo[j]
            if nmin == 0 and fmin + b[i] > upper[i]:
                return lo, hi, False
            if nmax == 0 and fmax + b[i] < lower[i]:
                return lo, hi, False
            for j in range(n):
                a = A[i, j]
                if a == 0:
                    continue
                # own contribution to the row min/max
                if a > 0:
                    own_min_inf = lo[j] == -np.inf
                    own_max_inf = hi[j] == np.inf
                    own_min = 0.0 if own_min_inf else a * lo[j]
                    own_max = 0.0 if own_max_inf else a * hi[j]
                else:
                    own_min_inf = hi[j] == np.inf
                    own_max_inf = lo[j] == -np.inf
                    own_min = 0.0 if own_min_inf else a * hi[j]
                    own_max = 0.0 if own_max_inf else a * lo[j]
                rest_min_inf = (nmin - (1 if own_min_inf else 0)) > 0
                rest_max_inf = (nmax - (1 if own_max_inf else 0)) > 0
                rest_min = fmin - own_min
                rest_max = fmax - own_max
                # lower - b - rest_max <= a x <= upper - b - rest_min
                t_lo = -np.inf
                t_hi = np.inf
                if not rest_max_inf and lower[i] != -np.inf:
                    t_lo = lower[i] - b[i] - rest_max
                if not rest_min_inf and upper[i] != np.inf:
                    t_hi = upper[i] - b[i] - rest_min
                if a > 0:
                    new_lo = np.ceil(t_lo / a) if t_lo != -np.inf else -np.inf
                    new_hi = np.floor(t_hi / a) if t_hi != np.inf else np.inf
                else:
                    new_lo = np.ceil(t_hi / a) if t_hi != np.inf else -np.inf
                    new_hi = np.floor(t_lo / a) if t_lo != -np.inf else np.inf
                if new_lo > lo[j]:
                    lo[j] = new_lo
                    changed = True
                if new_hi < hi[j]:
                    hi[j] = new_hi
                    changed = True
                if lo[j] > hi[j]:
                    return lo, hi, False
        if not changed:
            break
    return lo, hi, True


def _propagate_np(A, b, lower, upper, lo, hi, max_rounds):
    A = A.astype(np.float64)
    b = b.astype(np.float64)
    lo = lo.astype(np.float64).copy()
    hi = hi.astype(np.float64).copy()
    pos, neg = A > 0, A < 0
    with np.errstate(invalid="ignore"):
        for _ in range(max_rounds):
            # per-entry extreme contributions; nan where the coefficient is 0
            emin = np.where(pos, A * lo, np.where(neg, A * hi, 0.0))
            emax = np.where(pos, A * hi, np.where(neg, A * lo, 0.0))
            inf_min = np.isinf(emin)
            inf_max = np.isinf(emax)
            fmin = np.where(inf_min, 0.0, emin).sum(axis=1)
            fmax = np.where(inf_max, 0.0, emax).sum(axis=1)
            nmin = inf_min.sum(axis=1)
            nmax = inf_max.sum(axis=1)
            if np.any((nmin == 0) & (fmin + b > upper)) or np.any((nmax == 0) & (fmax + b < lower)):
                return lo, hi, False
            rest_min = fmin[:, None] - np.where(inf_min, 0.0, emin)
            rest_max = fmax[:, None] - np.where(inf_max, 0.0, emax)
            rest_min_inf = (nmin[:, None] - inf_min) > 0
            rest_max_inf = (nmax[:, None] - inf_max) > 0
            t_lo = np.where(rest_max_inf, -np.inf, lower[:, None] - b[:, None] - rest_max)
            t_hi = np.where(rest_min_inf, np.inf, upper[:, None] - b[:, None] - rest_min)
            safe = np.where(A == 0, 1.0, A)
            q_lo = t_lo / safe
            q_hi = t_hi / safe
            cand_lo = np.where(pos, np.ceil(q_lo), np.where(neg, np.ceil(q_hi), -np.inf))
            cand_hi = np.where(pos, np.floor(q_hi), np.where(neg, np.floor(q_lo), np.inf))
            cand_lo = np.where(np.isnan(cand_lo), -np.inf, cand_lo)
            cand_hi = np.where(np.isnan(cand_hi), np.inf, cand_hi)
            new_lo = np.maximum(lo, cand_lo.max(axis=0, initial=-np.inf))
            new_hi = np.minimum(hi, cand_hi.min(axis=0, initial=np.inf))
            if np.any(new_lo > new_hi):
                return new_lo, new_hi, False
            if np.array_equal(new_lo, lo) and np.array_equal(new_hi, hi):
                break
            lo, hi = new_lo, new_hi
    return lo, hi, True


def propagate(A, b, lower, upper, lo, hi, max_rounds=1000):
    """Interval fixpoint for the rows; returns (lo, hi, feasible)."""
    A = np.ascontiguousarray(A, dtype=np.int64)
    args = (
        A,
        np.ascontiguousarray(b, dtype=np.int64),
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
        np.ascontiguousarray(lo, dtype=np.float64),
        np.ascontiguousarray(hi, dtype=np.float64),
        max_rounds,
    )
    if A.shape[1] == 0:
        vals = args[1].astype(np.float64)
        ok = bool(np.all((vals >= args[2]) & (vals <= args[3])))
        return args[4].copy(), args[5].copy(), ok
    if HAVE_NUMBA:
        return _propagate_nb(*args)
    return _propagate_np(*args)


# ---------------------------------------------------------------------------
# depth-first enumeration


def _clip_bounds(lower, upper):
    lo = np.where(np.isinf(lower), -BIG, lower).astype(np.int64)
    hi = np.where(np.isinf(upper), BIG, upper).astype(np.int64)
    return lo, hi


@njit(cache=True)
def _floordiv(a, b):
    q = a // b
    return q


@njit(cache=True)
def _ceildiv(a, b):
    return -((-a) // b)


@njit(cache=True)
def _dfs_nb(A, b, lower, upper, modulus, lo, hi, out):
    m, n = A.shape
    # suffix extreme contributions of variables j..n-1 for each row
    smin = np.zeros((n + 1, m), dtype=np.int64)
    smax = np.zeros((n + 1, m), dtype=np.int64)
    # ready[j, i]: every coefficient from position j on is 0 mod modulus[i]
    ready = np.ones((n + 1, m), dtype=np.bool_)
    for j in range(n - 1, -1, -1):
        for i in range(m):
            a = A[i, j]
            if a >= 0:
                smin[j, i] = smin[j + 1, i] + a * lo[j]
                smax[j, i] = smax[j + 1, i] + a * hi[j]
            else:
                smin[j, i] = smin[j + 1, i] + a * hi[j]
                smax[j, i] = smax[j + 1, i] + a * lo[j]
            ready[j, i] = ready[j + 1, i] and (a % modulus[i] == 0)

    partial = np.zeros((n + 1, m), dtype=np.int64)
    for i in range(m):
        partial[0, i] = b[i]
    x = np.zeros(n, dtype=np.int64)
    top = np.zeros(n, dtype=np.int64)
    count = 0
    overflow = False
    depth = 0
    entering = True
    while depth >= 0:
        if entering:
            # node check and range for variable `depth`
            alive = True
            vlo = lo[depth]
            vhi = hi[depth]
            for i in range(m):
                p = partial[depth, i]
                if p + smax[depth, i] < lower[i] or p + smin[depth, i] > upper[i]:
                    alive = False
                    break
                if ready[depth, i] and p % modulus[i] != 0:
                    alive = False
                    break
                a = A[i, depth]
                if a == 0:
                    continue
                t_lo = lower[i] - p - smax[depth + 1, i]
                t_hi = upper[i] - p - smin[depth + 1, i]
                if a > 0:
                    c_lo = _ceildiv(t_lo, a)
                    c_hi = _floordiv(t_hi, a)
                else:
                    c_lo = _ceildiv(t_hi, a)
                    c_hi = _floordiv(t_lo, a)
                if c_lo > vlo:
                    vlo = c_lo
                if c_hi < vhi:
                    vhi = c_hi
                if vlo > vhi:
                    alive = False
                    break
            if not alive:
                depth -= 1
                entering = False
                continue
            x[depth] = vlo
            top[depth] = vhi
        else:
            x[depth] += 1
            if x[depth] > top[depth]:
                depth -= 1
                continue
        for i in range(m):
            partial[depth + 1, i] = partial[depth, i] + A[i, depth] * x[depth]
        if depth + 1 == n:
            ok = True
            for i in range(m):
                v = partial[n, i]
                if v < lower[i] or v > upper[i] or v % modulus[i] != 0:
                    ok = False
                    break
            if ok:
                if count < out.shape[0]:
                    for j in range(n):
                        out[count, j] = x[j]
                else:
                    overflow = True
                count += 1
            entering = False
        else:
            depth += 1
            entering = True
    return count, overflow


def _dfs_np(A, b, lower, upper, modulus, lo, hi):
    """Level-wise vectorized variant of the same search."""
    m, n = A.shape
    prefixes = np.zeros((1, 0), dtype=np.int64)
    partial = b[None, :].astype(np.int64)
    smin = np.zeros((n + 1, m), dtype=np.int64)
    smax = np.zeros((n + 1, m), dtype=np.int64)
    ready = np.ones((n + 1, m), dtype=bool)
    for j in range(n - 1, -1, -1):
        a = A[:, j]
        smin[j] = smin[j + 1] + np.where(a >= 0, a * lo[j], a * hi[j])
        smax[j] = smax[j + 1] + np.where(a >= 0, a * hi[j], a * lo[j])
        ready[j] = ready[j + 1] & (a % modulus == 0)
    for depth in range(n):
        alive = ~np.any(
            (partial + smax[depth] < lower) | (partial + smin[depth] > upper), axis=1
        )
        alive &= ~np.any(ready[depth] & (partial % modulus != 0), axis=1)
        prefixes, partial = prefixes[alive], partial[alive]
        a = A[:, depth]
        nz = a != 0
        t_lo = lower - partial - smax[depth + 1]
        t_hi = upper - partial - smin[depth + 1]
        ap = np.where(nz, a, 1)
        c_lo = np.where(a > 0, -((-t_lo) // ap), -((-t_hi) // ap))
        c_hi = np.where(a > 0, t_hi // ap, t_lo // ap)
        c_lo = np.where(nz, c_lo, -BIG)
        c_hi = np.where(nz, c_hi, BIG)
        vlo = np.maximum(lo[depth], c_lo.max(axis=1, initial=-BIG))
        vhi = np.minimum(hi[depth], c_hi.min(axis=1, initial=BIG))
        counts = np.maximum(vhi - vlo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return np.zeros((0, n), dtype=np.int64)
        rep = np.repeat(np.arange(len(prefixes)), counts)
        starts = np.repeat(vlo, counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        vals = starts + offsets
        prefixes = np.concatenate([prefixes[rep], vals[:, None]], axis=1)
        partial = partial[rep] + vals[:, None] * a[None, :]
    ok = np.all((partial >= lower) & (partial <= upper) & (partial % modulus == 0), axis=1)
    return prefixes[ok]


def dfs_enumerate(A, b, lower, upper, modulus, lo, hi):
    """All integer x in the box [lo, hi] satisfying every row, in
    lexicographic order."""
    A = np.ascontiguousarray(A, dtype=np.int64)
    m, n = A.shape
    b = np.ascontiguousarray(b, dtype=np.int64)
    lower_i, upper_i = _clip_bounds(np.asarray(lower, dtype=np.float64), np.asarray(upper, dtype=np.float64))
    modulus = np.ascontiguousarray(modulus, dtype=np.int64)
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    if n == 0:
        ok = np.all((b >= lower_i) & (b <= upper_i) & (b % modulus == 0))
        return np.zeros((1 if ok else 0, 0), dtype=np.int64)
    if np.any(lo > hi):
        return np.zeros((0, n), dtype=np.int64)
    if not HAVE_NUMBA:
        return _dfs_np(A, b, lower_i, upper_i, modulus, lo, hi)
    cap = 1024
    while True:
        out = np.empty((cap, n), dtype=np.int64)
        count, overflow = _dfs_nb(A, b, lower_i, upper_i, modulus, lo, hi, out)
        if not overflow:
            return out[:count].copy()
        cap = int(count)
