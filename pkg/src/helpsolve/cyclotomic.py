"""Exact arithmetic in cyclotomic fields Q(zeta_n).

Elements are stored over the power basis 1, z, ..., z^(phi(n)-1) of Q(zeta_n),
reduced modulo the n-th cyclotomic polynomial, so that two values represented
at the same conductor are equal exactly when their coefficient vectors are.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

__all__ = [
    "CycNum",
    "Rational",
    "add",
    "cyclotomic_polynomial",
    "embed",
    "euler_phi",
    "eval_complex",
    "from_root",
    "galois",
    "mul",
    "ramanujan_sum",
    "scale",
    "trace_to_Q",
]

Rational = Fraction
Scalar = Union[int, Fraction]


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@lru_cache(maxsize=None)
def euler_phi(n: int) -> int:
    result = n
    for p in _factorize(n):
        result = result // p * (p - 1)
    return result


def _moebius(n: int) -> int:
    fac = _factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


@lru_cache(maxsize=None)
def ramanujan_sum(n: int, e: int) -> int:
    """Sum of the e-th powers of all primitive n-th roots of unity."""
    g = math.gcd(e, n)
    m = n // g
    return _moebius(m) * euler_phi(n) // euler_phi(m)


def _poly_divexact(num: list[int], den: list[int]) -> list[int]:
    # coefficient lists are lowest degree first; den is monic
    num = list(num)
    dn = len(den) - 1
    out = [0] * (len(num) - dn)
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i]
        if c:
            out[i - dn] = c
            for j, dc in enumerate(den):
                num[i - dn + j] -= c * dc
    if any(num[:dn]):
        raise ArithmeticError("polynomial division left a remainder")
    return out


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, lowest degree first.

    Computed as (x^n - 1) divided exactly by Phi_d for every proper divisor d.
    """
    if n < 1:
        raise ValueError(f"conductor must be positive, got {n}")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly = _poly_divexact(poly, list(cyclotomic_polynomial(d)))
    return tuple(poly)


@lru_cache(maxsize=None)
def _power_table(n: int) -> tuple[tuple[int, ...], ...]:
    """Row e holds the reduced coordinates of z^e for 0 <= e < n."""
    phi = cyclotomic_polynomial(n)
    deg = len(phi) - 1
    rows = []
    cur = [0] * deg
    cur[0] = 1
    for _ in range(n):
        rows.append(tuple(cur))
        # multiply by x, then reduce the overflow using the monic Phi_n
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            for j in range(deg):
                cur[j] -= top * phi[j]
    return tuple(rows)


def _reduce_exponents(n: int, terms: Iterable[tuple[int, Scalar]]) -> tuple[Fraction, ...]:
    table = _power_table(n)
    deg = euler_phi(n)
    acc = [Fraction(0)] * deg
    for e, c in terms:
        if not c:
            continue
        row = table[e % n]
        for j, r in enumerate(row):
            if r:
                acc[j] += c * r
    return tuple(acc)


class CycNum:
    """An element of Q(zeta_n), immutable."""

    __slots__ = ("conductor", "coeffs")

    conductor: int
    coeffs: tuple[Fraction, ...]

    def __init__(self, conductor: int, coeffs: Iterable[Scalar]):
        if conductor < 1:
            raise ValueError(f"conductor must be positive, got {conductor}")
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != euler_phi(conductor):
            raise ValueError(
                f"expected {euler_phi(conductor)} coefficients for conductor {conductor}, "
                f"got {len(coeffs)}"
            )
        object.__setattr__(self, "conductor", conductor)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("CycNum is immutable")

    def __reduce__(self):
        return (CycNum, (self.conductor, self.coeffs))

    @classmethod
    def rational(cls, value: Scalar, conductor: int = 1) -> CycNum:
        coeffs = [Fraction(0)] * euler_phi(conductor)
        coeffs[0] = Fraction(value)
        return cls(conductor, coeffs)

    @classmethod
    def from_exponents(cls, conductor: int, terms: dict[int, Scalar] | Iterable[tuple[int, Scalar]]) -> CycNum:
        """Build sum(c * z^e) from a sparse exponent -> coefficient map."""
        items = terms.items() if isinstance(terms, dict) else terms
        return cls(conductor, _reduce_exponents(conductor, items))

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> CycNum:
        return CycNum(self.conductor, (-c for c in self.coeffs))

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return add(other, -self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return scale(self, other)
        if isinstance(other, CycNum):
            return mul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if self.conductor == other.conductor:
            return self.coeffs == other.coeffs
        m = math.lcm(self.conductor, other.conductor)
        return embed(self, m).coeffs == embed(other, m).coeffs

    def __hash__(self) -> int:
        # invariant under embedding into a larger conductor
        phi = euler_phi(self.conductor)
        return hash((trace_to_Q(self) / phi, trace_to_Q(mul(self, conjugate(self))) / phi))

    def __complex__(self) -> complex:
        return eval_complex(self)

    def __repr__(self) -> str:
        terms = []
        for e, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if e == 0 else f"{c}*z{self.conductor}^{e}")
        return "CycNum(" + (" + ".join(terms) or "0") + f"; n={self.conductor})"


def _coerce(x) -> CycNum | None:
    if isinstance(x, CycNum):
        return x
    if isinstance(x, (int, Fraction)):
        return CycNum.rational(x)
    return None


def from_root(n: int, e: int) -> CycNum:
    """zeta_n ** e in canonical form."""
    if n < 1:
        raise ValueError(f"conductor must be positive, got {n}")
    return CycNum(n, _power_table(n)[e % n])


def embed(a: CycNum, m: int) -> CycNum:
    """View ``a`` inside Q(zeta_m); requires conductor(a) | m."""
    n = a.conductor
    if m < 1 or m % n:
        raise ValueError(f"cannot embed conductor {n} into {m}")
    if m == n:
        return a
    step = m // n
    return CycNum(m, _reduce_exponents(m, ((e * step, c) for e, c in enumerate(a.coeffs))))


def _common(a: CycNum, b: CycNum) -> tuple[CycNum, CycNum]:
    if a.conductor == b.conductor:
        return a, b
    m = math.lcm(a.conductor, b.conductor)
    return embed(a, m), embed(b, m)


def add(a: CycNum, b: CycNum) -> CycNum:
    a, b = _common(a, b)
    return CycNum(a.conductor, (x + y for x, y in zip(a.coeffs, b.coeffs)))


def scale(a: CycNum, r: Scalar) -> CycNum:
    r = Fraction(r)
    return CycNum(a.conductor, (c * r for c in a.coeffs))


def _integral(coeffs: tuple[Fraction, ...]) -> tuple[list[int], int]:
    den = math.lcm(*(c.denominator for c in coeffs)) if coeffs else 1
    return [c.numerator * (den // c.denominator) for c in coeffs], den


def mul(a: CycNum, b: CycNum) -> CycNum:
    a, b = _common(a, b)
    n = a.conductor
    # integer numerators over a common denominator; Fractions only at the end
    xa, da = _integral(a.coeffs)
    xb, db = _integral(b.coeffs)
    prod = [0] * (2 * len(xa) - 1)
    for i, x in enumerate(xa):
        if x:
            for j, y in enumerate(xb):
                if y:
                    prod[i + j] += x * y
    table = _power_table(n)
    acc = [0] * len(xa)
    for e, c in enumerate(prod):
        if c:
            for j, r in enumerate(table[e % n]):
                if r:
                    acc[j] += c * r
    den = da * db
    return CycNum(n, (Fraction(c, den) for c in acc))


def galois(a: CycNum, j: int) -> CycNum:
    """Apply the automorphism z -> z^j of Q(zeta_n)."""
    n = a.conductor
    if math.gcd(j, n) != 1:
        raise ValueError(f"{j} is not coprime to the conductor {n}")
    return CycNum(n, _reduce_exponents(n, ((e * j, c) for e, c in enumerate(a.coeffs))))


def conjugate(a: CycNum) -> CycNum:
    return galois(a, -1)


def trace_to_Q(a: CycNum) -> Fraction:
    """Trace from Q(zeta_n) down to Q, n being the conductor of ``a``.

    Uses Tr(z^e) = Ramanujan sum c_n(e) on the power basis.
    """
    n = a.conductor
    return sum((c * ramanujan_sum(n, e) for e, c in enumerate(a.coeffs) if c), Fraction(0))


def eval_complex(a: CycNum) -> complex:
    n = a.conductor
    return sum(
        (float(c) * cmath.exp(2j * math.pi * e / n) for e, c in enumerate(a.coeffs) if c),
        0j,
    )
