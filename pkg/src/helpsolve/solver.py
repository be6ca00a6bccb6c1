"""Integer point enumeration for HeLP constraint systems."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .help_core import AugTuple, ConstraintSystem, HelpError

__all__ = [
    "Box",
    "BoxTooLarge",
    "SolutionSet",
    "Unbounded",
    "brute_force",
    "classify_trivial",
    "enumerate",
    "enumerate_solutions",
    "propagate_bounds",
    "verify_point",
]

BRUTE_FORCE_LIMIT = 10**8


class Unbounded(HelpError):
    pass


class BoxTooLarge(HelpError):
    pass


@dataclass(frozen=True)
class Box:
    """Closed integer interval per variable.  ``lo``/``hi`` are None for the
    empty box."""

    variables: tuple[str, ...]
    lo: tuple[int, ...] | None
    hi: tuple[int, ...] | None

    def __post_init__(self):
        if (self.lo is None) != (self.hi is None):
            raise ValueError("lo and hi must both be set or both be None")
        if self.lo is not None:
            if not len(self.lo) == len(self.hi) == len(self.variables):
                raise ValueError("bound vectors do not match the variables")
            if any(a > b for a, b in zip(self.lo, self.hi)):
                raise ValueError("lo > hi; use Box.empty for an empty box")

    @classmethod
    def empty(cls, variables: Sequence[str]) -> Box:
        return cls(tuple(variables), None, None)

    @classmethod
    def of(cls, variables: Sequence[str], bounds: Sequence[tuple[int, int]]) -> Box:
        bounds = list(bounds)
        if any(a > b for a, b in bounds):
            return cls.empty(variables)
        return cls(tuple(variables), tuple(int(a) for a, _ in bounds), tuple(int(b) for _, b in bounds))

    def is_empty(self) -> bool:
        return self.lo is None

    def size(self) -> int:
        if self.is_empty():
            return 0
        n = 1
        for a, b in zip(self.lo, self.hi):
            n *= b - a + 1
        return n

    def contains(self, point: Sequence[int]) -> bool:
        if self.is_empty():
            return False
        return all(a <= x <= b for a, x, b in zip(self.lo, point, self.hi))

    def contains_box(self, other: Box) -> bool:
        if other.is_empty():
            return True
        if self.is_empty():
            return False
        return self.contains(other.lo) and self.contains(other.hi)

    def widen(self, margin: int) -> Box:
        if self.is_empty():
            return self
        return Box(self.variables, tuple(a - margin for a in self.lo), tuple(b + margin for b in self.hi))

    def __str__(self) -> str:
        if self.is_empty():
            return "empty box"
        return " x ".join(f"[{a},{b}]" for a, b in zip(self.lo, self.hi))


@dataclass(frozen=True)
class SolutionSet:
    """Sorted, duplicate-free partial augmentation tuples of one order."""

    order: int
    classes: tuple[str, ...]
    tuples: tuple[AugTuple, ...]

    def __post_init__(self):
        vals = [t.values for t in self.tuples]
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ValueError("tuples must be strictly increasing")

    @classmethod
    def from_rows(cls, order: int, classes: Sequence[str], rows: Iterable[Sequence[int]]) -> SolutionSet:
        classes = tuple(classes)
        uniq = sorted({tuple(int(v) for v in r) for r in rows})
        return cls(order, classes, tuple(AugTuple(order, classes, r) for r in uniq))

    @classmethod
    def empty(cls, order: int, classes: Sequence[str]) -> SolutionSet:
        return cls(order, tuple(classes), ())

    def union(self, *others: SolutionSet) -> SolutionSet:
        rows = [t.values for t in self.tuples]
        for o in others:
            if o.order != self.order or o.classes != self.classes:
                raise ValueError("cannot merge solution sets of different shapes")
            rows.extend(t.values for t in o.tuples)
        return SolutionSet.from_rows(self.order, self.classes, rows)

    def rows(self) -> list[tuple[int, ...]]:
        return [t.values for t in self.tuples]

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def __contains__(self, item) -> bool:
        vals = item.values if isinstance(item, AugTuple) else tuple(item)
        return any(t.values == vals for t in self.tuples)

    def __bool__(self) -> bool:
        return bool(self.tuples)


def _row_bounds(sys: ConstraintSystem) -> tuple[np.ndarray, np.ndarray]:
    lower = np.where(sys.signed, 0.0, -np.inf)
    upper = np.where(sys.signed, sys.upper.astype(np.float64), np.inf)
    return lower, upper


def propagate_bounds(sys: ConstraintSystem, start: Box | None = None, max_rounds: int = 1000) -> Box:
    """Interval fixpoint of the sign rows, their implied upper bounds and the
    equality sum(nu) = 1.

    Raises Unbounded if some variable keeps an infinite side.
    """
    n = len(sys.variables)
    if sys.infeasible or n == 0:
        return Box.empty(sys.variables)
    if start is not None and start.is_empty():
        return start
    lower, upper = _row_bounds(sys)

    # reduced space: substitute the last variable by 1 - sum(others)
    last = sys.A[:, -1:]
    Ar = np.vstack([sys.A[:, :-1] - last, np.full((1, n - 1), -1, dtype=np.int64)])
    br = np.concatenate([sys.b + last[:, 0], [1]])
    lo_last, hi_last = (-np.inf, np.inf) if start is None else (start.lo[-1], start.hi[-1])
    lr = np.concatenate([lower, [float(lo_last)]])
    ur = np.concatenate([upper, [float(hi_last)]])
    if start is None:
        lo = np.full(n - 1, -np.inf)
        hi = np.full(n - 1, np.inf)
    else:
        lo = np.array(start.lo[:-1], dtype=np.float64)
        hi = np.array(start.hi[:-1], dtype=np.float64)
    lo, hi, ok = _kernels.propagate(Ar, br, lr, ur, lo, hi, max_rounds)
    if ok and (np.isinf(lo).any() or np.isinf(hi).any()):
        seed = _basis_box(Ar[:-1][sys.signed], br[:-1][sys.signed], sys.upper[sys.signed])
        if seed is not None:
            lo, hi = np.maximum(lo, seed[0]), np.minimum(hi, seed[1])
            lo, hi, ok = _kernels.propagate(Ar, br, lr, ur, lo, hi, max_rounds)
    if not ok or (lo > hi).any():
        return Box.empty(sys.variables)
    lo = np.append(lo, max(1 - hi.sum(), float(lo_last)))
    hi = np.append(hi, min(1 - lo[:-1].sum(), float(hi_last)))
    if np.isinf(lo).any() or np.isinf(hi).any():
        free = [v for v, a, c in zip(sys.variables, lo, hi) if np.isinf(a) or np.isinf(c)]
        raise Unbounded(f"order {sys.order}: no finite bound for {', '.join(free)}")

    # full space, equality used in both directions, tightens the last variable
    A = np.vstack([sys.A, np.ones((1, n), dtype=np.int64)])
    b = np.concatenate([sys.b, [-1]])
    lo, hi, ok = _kernels.propagate(A, b, np.append(lower, 0.0), np.append(upper, 0.0), lo, hi, max_rounds)
    if not ok:
        return Box.empty(sys.variables)
    return Box.of(sys.variables, zip(lo.astype(np.int64), hi.astype(np.int64)))


def _basis_box(A: np.ndarray, b: np.ndarray, upper: np.ndarray):
    """Finite bounds from n independent two-sided rows 0 <= A x + b <= upper.

    With R the chosen rows, x = R^-1 (y - b_R) for y in the row box, bounded
    exactly by interval arithmetic on R^-1.  Rows with small ``upper`` are
    preferred.  Returns None when the rows do not span (truly unbounded).
    """
    n = A.shape[1]
    chosen: list[int] = []
    echelon: list[list[Fraction]] = []
    pivots: list[int] = []
    for i in np.argsort(upper, kind="stable"):
        row = [Fraction(int(v)) for v in A[i]]
        for piv, e in zip(pivots, echelon):
            if row[piv]:
                f = row[piv] / e[piv]
                row = [r - f * x for r, x in zip(row, e)]
        nz = [j for j in range(n) if row[j]]
        if nz:
            chosen.append(int(i))
            echelon.append(row)
            pivots.append(nz[0])
            if len(chosen) == n:
                break
    if len(chosen) < n:
        return None
    inv = _inverse([[Fraction(int(v)) for v in A[i]] for i in chosen])
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        low = high = -sum(inv[j][r] * int(b[i]) for r, i in zip(range(n), chosen))
        for r, i in zip(range(n), chosen):
            c = inv[j][r] * int(upper[i])
            if c > 0:
                high += c
            else:
                low += c
        lo[j] = math.ceil(low)
        hi[j] = math.floor(high)
    return lo, hi


def _inverse(M: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(M)
    aug = [row[:] + [Fraction(int(r == c)) for c in range(n)] for r, row in zip(range(n), M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _reduced(sys: ConstraintSystem, box: Box):
    """Substitute the last variable by 1 - sum(others); its box becomes a row."""
    A = sys.A
    last = A[:, -1:]
    Ar = A[:, :-1] - last
    br = sys.b + last[:, 0]
    lower, upper = _row_bounds(sys)
    modulus = sys.modulus
    n = A.shape[1]
    extra = np.full((1, n - 1), -1, dtype=np.int64)
    Ar = np.vstack([Ar, extra])
    br = np.concatenate([br, [1]])
    lower = np.concatenate([lower, [float(box.lo[-1])]])
    upper = np.concatenate([upper, [float(box.hi[-1])]])
    modulus = np.concatenate([modulus, [1]])
    return Ar, br, lower, upper, modulus, np.array(box.lo[:-1]), np.array(box.hi[:-1])


def _finish(sys: ConstraintSystem, rows: np.ndarray) -> SolutionSet:
    out = SolutionSet.from_rows(sys.order, sys.variables, (tuple(map(int, r)) for r in rows))
    for t in out:
        if not verify_point(sys, t.values):
            raise AssertionError(f"search emitted {t} which violates the order-{sys.order} system")
    return out


def enumerate_solutions(sys: ConstraintSystem, box: Box | None = None) -> SolutionSet:
    """All integer points of ``box`` satisfying the system, sorted.

    Depth-first over variables in dataset order with the last variable
    eliminated through sum(nu) = 1.  Without a box, propagate_bounds is used.
    """
    n = len(sys.variables)
    if box is None:
        box = propagate_bounds(sys)
    if sys.infeasible or n == 0 or box.is_empty():
        return SolutionSet.empty(sys.order, sys.variables)
    if box.variables != sys.variables:
        raise HelpError("box variables do not match the system")
    Ar, br, lower, upper, modulus, lo, hi = _reduced(sys, box)
    pts = _kernels.dfs_enumerate(Ar, br, lower, upper, modulus, lo, hi)
    full = np.concatenate([pts, 1 - pts.sum(axis=1, keepdims=True)], axis=1)
    return _finish(sys, full)


enumerate = enumerate_solutions


def brute_force(
    sys: ConstraintSystem, box: Box, limit: int = BRUTE_FORCE_LIMIT, chunk: int = 1 << 16
) -> SolutionSet:
    """Scan every point of ``box`` against the raw rows; no propagation.

    The last coordinate is fixed by sum(nu) = 1, so only the others are
    scanned; ``limit`` caps that scanned count.
    """
    if box.is_empty() or sys.infeasible or not sys.variables:
        return SolutionSet.empty(sys.order, sys.variables)
    shape = tuple(b - a + 1 for a, b in zip(box.lo[:-1], box.hi[:-1]))
    total = math.prod(shape)
    if total > limit:
        raise BoxTooLarge(f"box needs {total} points scanned, limit is {limit}")
    origin = np.array(box.lo[:-1], dtype=np.int64)
    # congruence rows first, then sign rows with small constants; order only affects speed
    order = np.lexsort((sys.b, sys.signed))
    found = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        grid = np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64) + origin if shape else np.zeros((1, 0), np.int64)
        pts = np.concatenate([grid, 1 - grid.sum(axis=1, keepdims=True)], axis=1)
        pts = pts[(pts[:, -1] >= box.lo[-1]) & (pts[:, -1] <= box.hi[-1])]
        # row by row, dropping dead points as we go
        for i in order:
            if not len(pts):
                break
            v = pts @ sys.A[i] + sys.b[i]
            ok = v % sys.modulus[i] == 0
            if sys.signed[i]:
                ok &= v >= 0
            pts = pts[ok]
        found.append(pts)
    return _finish(sys, np.concatenate(found) if found else np.zeros((0, len(sys.variables)), np.int64))


def verify_point(sys: ConstraintSystem, values: Sequence[int]) -> bool:
    """Check one point against the Constraint objects with Python integers."""
    if sys.infeasible or len(values) != len(sys.variables) or sum(values) != 1:
        return False
    nu = dict(zip(sys.variables, (int(v) for v in values)))
    return all(c.satisfied(nu) for c in sys.constraints)


def classify_trivial(chain: Mapping[int, AugTuple]) -> bool:
    """True iff every power u^d in the chain has a trivial partial
    augmentation tuple (a single nonzero entry equal to 1)."""
    return all(t.is_trivial() for t in chain.values())


def box_points(box: Box) -> Iterable[tuple[int, ...]]:
    if box.is_empty():
        return iter(())
    return itertools.product(*(range(a, b + 1) for a, b in zip(box.lo, box.hi)))
