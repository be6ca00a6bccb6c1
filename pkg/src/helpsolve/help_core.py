"""Constraint generation for torsion units via the Luthar-Passi conditions.

For a hypothetical unit u of order k with partial augmentations nu (one integer
per non-identity class whose element order divides k) every character chi,
ordinary or p-Brauer with p prime to k, yields for each residue l the integer

    k * mu_l = sum over d | k of Tr_{Q(z^d)/Q}( chi(u^d) * z^(-d*l) )

which must be non-negative and divisible by k.  The d = 1 term is linear in nu;
every other term is fixed once the partial augmentations of the proper powers
u^d are chosen (a "case").  Prime power orders additionally get the congruence
conditions on sums of partial augmentations over classes of smaller order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chartab import Character, CharacterTable, _factor, classes_of_order_dividing
from .cyclotomic import CycNum, embed, from_root, mul, trace_to_Q

__all__ = [
    "AugTuple",
    "CaseAssignment",
    "Constraint",
    "ConstraintSystem",
    "HelpError",
    "LinearForm",
    "SystemBuilder",
    "build_system",
    "chi_at_power",
    "cl_congruences",
    "divisors",
    "mu_form",
]


class HelpError(ValueError):
    pass


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@dataclass(frozen=True, order=True)
class AugTuple:
    """Partial augmentations of a unit of the given order.

    ``classes`` lists the classes in dataset order; entries of all other
    classes are implicitly zero.
    """

    order: int
    classes: tuple[str, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.classes) != len(self.values):
            raise ValueError("classes and values differ in length")

    @classmethod
    def from_mapping(cls, order: int, classes: Sequence[str], entries: Mapping[str, int]) -> AugTuple:
        extra = set(entries) - set(classes)
        if any(entries[c] for c in extra):
            raise ValueError(f"nonzero partial augmentation outside {tuple(classes)}: {sorted(extra)}")
        return cls(order, tuple(classes), tuple(int(entries.get(c, 0)) for c in classes))

    @property
    def entries(self) -> dict[str, int]:
        return dict(zip(self.classes, self.values))

    def is_trivial(self) -> bool:
        """Exactly one nonzero entry, equal to 1."""
        nz = [v for v in self.values if v]
        return nz == [1]

    def __str__(self) -> str:
        return "(" + ", ".join(str(v) for v in self.values) + ")"


@dataclass(frozen=True)
class CaseAssignment:
    """Assumed partial augmentations of u^d for each proper divisor 1 < d < k."""

    order: int
    choices: Mapping[int, AugTuple] = field(default_factory=dict)

    def __post_init__(self):
        for d, tup in self.choices.items():
            if self.order % d or not 1 < d < self.order:
                raise HelpError(f"{d} is not a proper divisor > 1 of {self.order}")
            if tup.order != self.order // d:
                raise HelpError(f"choice for d={d} has order {tup.order}, expected {self.order // d}")

    def __getitem__(self, d: int) -> AugTuple:
        try:
            return self.choices[d]
        except KeyError:
            raise HelpError(f"case for order {self.order} has no choice for u^{d}") from None


@dataclass(frozen=True)
class LinearForm:
    coeffs: Mapping[str, int]
    constant: int

    def __call__(self, nu: Mapping[str, int]) -> int:
        return sum(c * nu.get(v, 0) for v, c in self.coeffs.items()) + self.constant

    def is_constant(self) -> bool:
        return not any(self.coeffs.values())


@dataclass(frozen=True)
class Constraint:
    """form(nu) must be divisible by ``modulus``; if ``signed`` it must also be >= 0.

    ``upper`` is an implied upper bound on the form (k * chi(1) for mu forms);
    it never excludes a point the other constraints allow.
    """

    form: LinearForm
    modulus: int
    tag: str
    signed: bool = True
    upper: int | None = None

    def satisfied(self, nu: Mapping[str, int]) -> bool:
        v = self.form(nu)
        if self.signed and v < 0:
            return False
        return v % self.modulus == 0


def _tag(l: int, chi: Character) -> str:
    return f"mu(l={l}, {chi.id}, p={'*' if chi.p == 0 else chi.p})"


def chi_at_power(chi: Character, k: int, d: int, case: CaseAssignment) -> CycNum:
    """chi(u^d) = sum of nu_c(u^d) * chi(c) over the assumed tuple for u^d."""
    if k % d or d < 1:
        raise HelpError(f"{d} does not divide {k}")
    if d == k:
        return CycNum.rational(chi.degree)
    if d == 1:
        raise HelpError("chi(u) itself is the unknown; use d > 1")
    tup = case[d]
    total = CycNum.rational(0, k // d)
    for cls, nu in zip(tup.classes, tup.values):
        if nu:
            total = total + chi.value(cls) * nu
    return embed(total, k // d) if total.conductor != k // d else total


def _trace_int(x: CycNum, where: str) -> int:
    t = trace_to_Q(x)
    if t.denominator != 1:
        raise HelpError(f"non-integral trace {t} in {where}; dataset corrupt?")
    return int(t)


def _check_prime(k: int, chi: Character) -> None:
    if chi.p and k % chi.p == 0:
        raise HelpError(f"Brauer character {chi.id} mod {chi.p} cannot be used for order {k}")


def mu_form(
    k: int, l: int, chi: Character, case: CaseAssignment, t: CharacterTable
) -> Constraint:
    """k * mu_l(u, chi, p) as a linear form in the partial augmentations of u."""
    _check_prime(k, chi)
    variables = [c.name for c in classes_of_order_dividing(t, k)]
    zk = from_root(k, -l)
    coeffs = {
        v: _trace_int(mul(embed(chi.value(v), k), zk), f"{_tag(l, chi)} coefficient of {v}")
        for v in variables
    }
    constant = 0
    for d in divisors(k)[1:]:
        m = k // d
        val = chi_at_power(chi, k, d, case)
        constant += _trace_int(mul(embed(val, m), from_root(m, -l)), f"{_tag(l, chi)} term d={d}")
    return Constraint(LinearForm(coeffs, constant), k, _tag(l, chi), True, k * chi.degree)


def cl_congruences(k: int, t: CharacterTable) -> list[Constraint]:
    """For k = p^n: the partial augmentations over classes of order p^m, m < n,
    sum to a multiple of p."""
    fac = _factor(k)
    if len(fac) != 1:
        raise HelpError(f"{k} is not a prime power")
    ((p, n),) = fac.items()
    variables = [c.name for c in classes_of_order_dividing(t, k)]
    out = []
    for m in range(1, n):
        coeffs = {v: int(t.order_of(v) == p**m) for v in variables}
        if any(coeffs.values()):
            out.append(Constraint(LinearForm(coeffs, 0), p, f"CL(p={p},m={m})", signed=False))
    return out


def usable_characters(t: CharacterTable, k: int) -> list[Character]:
    """Ordinary characters plus every Brauer table whose prime does not divide k."""
    chars = list(t.ordinary)
    for p in sorted(t.brauer):
        if k % p:
            chars.extend(t.brauer[p])
    return chars


class ConstraintSystem:
    """Integer constraint system over the partial augmentations of a unit.

    Rows i read: lower_i <= A[i] . nu + b[i] <= upper_i and
    A[i] . nu + b[i] == 0 (mod modulus[i]); plus sum(nu) == 1.  Unsigned rows
    carry lower = -inf and upper = +inf.
    """

    def __init__(
        self,
        order: int,
        variables: Sequence[str],
        A: np.ndarray,
        b: np.ndarray,
        modulus: np.ndarray,
        signed: np.ndarray,
        upper: np.ndarray,
        tags: Sequence[str],
        infeasible: str | None = None,
    ):
        self.order = order
        self.variables = tuple(variables)
        self.A = np.asarray(A, dtype=np.int64).reshape(len(tags), len(self.variables))
        self.b = np.asarray(b, dtype=np.int64)
        self.modulus = np.asarray(modulus, dtype=np.int64)
        self.signed = np.asarray(signed, dtype=bool)
        self.upper = np.asarray(upper, dtype=np.int64)
        self.tags = list(tags)
        self.infeasible = infeasible

    def __len__(self) -> int:
        return len(self.tags)

    @cached_property
    def constraints(self) -> list[Constraint]:
        out = []
        for i, tag in enumerate(self.tags):
            form = LinearForm(dict(zip(self.variables, map(int, self.A[i]))), int(self.b[i]))
            signed = bool(self.signed[i])
            out.append(Constraint(form, int(self.modulus[i]), tag, signed, int(self.upper[i]) if signed else None))
        return out

    def satisfied_by(self, nu: Sequence[int]) -> bool:
        if self.infeasible or sum(nu) != 1:
            return False
        vals = self.A @ np.asarray(nu, dtype=np.int64) + self.b
        ok = vals % self.modulus == 0
        ok &= ~self.signed | (vals >= 0)
        return bool(ok.all())

    def render(self) -> list[str]:
        """Constraints in the (1/k)(...) >= 0 notation, one per line."""
        lines = [" + ".join(f"v{v}" for v in self.variables) + " = 1"]
        if self.infeasible:
            lines.append(f"# infeasible: {self.infeasible}")
        for c in self.constraints:
            lines.append(render_constraint(c, self.variables))
        return lines


def render_form(form: LinearForm, variables: Sequence[str]) -> str:
    parts = []
    for v in variables:
        c = form.coeffs.get(v, 0)
        if not c:
            continue
        mag = "" if abs(c) == 1 else f"{abs(c)}*"
        if not parts:
            parts.append(("-" if c < 0 else "") + f"{mag}v{v}")
        else:
            parts.append(("- " if c < 0 else "+ ") + f"{mag}v{v}")
    if form.constant or not parts:
        c = form.constant
        parts.append(str(c) if not parts else ("- " if c < 0 else "+ ") + str(abs(c)))
    return " ".join(parts)


def render_constraint(c: Constraint, variables: Sequence[str]) -> str:
    body = render_form(c.form, variables)
    if c.signed:
        return f"(1/{c.modulus})({body}) >= 0 in Z    [{c.tag}]"
    return f"{body} == 0 mod {c.modulus}    [{c.tag}]"


class SystemBuilder:
    """Builds the constraint systems of one order for many case assignments.

    Traces that do not depend on the case are computed once; a case only
    contributes the constants of its power terms, which reduce to a dot product
    with precomputed trace tables.
    """

    def __init__(self, t: CharacterTable, k: int):
        if t.exponent % k:
            raise HelpError(f"{k} does not divide exp(G) = {t.exponent}")
        self.table = t
        self.k = k
        self.variables = tuple(c.name for c in classes_of_order_dividing(t, k))
        self.chars = usable_characters(t, k)
        self.proper = [d for d in divisors(k) if 1 < d < k]
        nchar, nvar = len(self.chars), len(self.variables)

        # linear part: lin[chi, l, v] = Tr_{Q(zeta_k)/Q}(chi(v) * zeta_k^-l)
        self._lin = np.zeros((nchar, k, nvar), dtype=np.int64)
        for ci, chi in enumerate(self.chars):
            for vi, v in enumerate(self.variables):
                self._lin[ci, :, vi] = _trace_row(chi.value(v), k, f"{chi.id} at {v}")
        self._degree = np.array([chi.degree for chi in self.chars], dtype=np.int64)

        # power terms: pw[d][chi, l, c] = Tr_{Q(zeta_m)/Q}(chi(c) * zeta_m^-l), m = k/d
        self._power_classes: dict[int, tuple[str, ...]] = {}
        self._pw: dict[int, np.ndarray] = {}
        for d in self.proper:
            m = k // d
            cls = tuple(c.name for c in classes_of_order_dividing(t, m))
            self._power_classes[d] = cls
            arr = np.zeros((nchar, k, len(cls)), dtype=np.int64)
            for ci, chi in enumerate(self.chars):
                for j, c in enumerate(cls):
                    row = _trace_row(chi.value(c), m, f"{chi.id} at {c}")
                    arr[ci, :, j] = row[np.arange(k) % m]
            self._pw[d] = arr

        self._cl = cl_congruences(k, t) if len(_factor(k)) == 1 and k > 1 else []
        self._tags = [_tag(l, chi) for chi in self.chars for l in range(k)]

    def power_classes(self, d: int) -> tuple[str, ...]:
        return self._power_classes[d]

    def constants(self, case: CaseAssignment) -> np.ndarray:
        """Constant terms, shape (n_characters, k)."""
        const = np.repeat(self._degree[:, None], self.k, axis=1)
        for d in self.proper:
            tup = case[d]
            if tup.classes != self._power_classes[d]:
                tup = AugTuple.from_mapping(tup.order, self._power_classes[d], tup.entries)
            const = const + self._pw[d] @ np.asarray(tup.values, dtype=np.int64)
        return const

    def raw_forms(self, case: CaseAssignment) -> tuple[np.ndarray, np.ndarray]:
        """All mu forms before deduplication: (coefficients, constants) with
        shapes (n_characters, k, n_vars) and (n_characters, k)."""
        return self._lin, self.constants(case)

    def build(self, case: CaseAssignment) -> ConstraintSystem:
        k = self.k
        nvar = len(self.variables)
        const = self.constants(case).reshape(-1)
        A = self._lin.reshape(-1, nvar)
        upper = np.repeat(k * self._degree, k)

        zero = ~A.any(axis=1)
        infeasible = None
        if zero.any():
            bad = zero & ((const < 0) | (const % k != 0))
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                infeasible = f"{self._tags[i]} is the constant {const[i]}/{k}"
        keep = ~zero
        A, const, upper = A[keep], const[keep], upper[keep]
        tags = [tg for tg, kp in zip(self._tags, keep) if kp]

        # dedupe identical forms, keeping the tightest implied upper bound
        key = np.concatenate([A, const[:, None]], axis=1)
        _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
        upper_min = np.full(len(first), np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(upper_min, inverse.reshape(-1), upper)
        perm = np.argsort(first)
        order = first[perm]
        upper_min = upper_min[perm]
        A, const = A[order], const[order]
        tags = [tags[i] for i in order]
        modulus = np.full(len(order), k, dtype=np.int64)
        signed = np.ones(len(order), dtype=bool)

        if self._cl:
            A = np.vstack([A, [[c.form.coeffs[v] for v in self.variables] for c in self._cl]])
            const = np.concatenate([const, np.zeros(len(self._cl), dtype=np.int64)])
            modulus = np.concatenate([modulus, [c.modulus for c in self._cl]])
            signed = np.concatenate([signed, np.zeros(len(self._cl), dtype=bool)])
            upper_min = np.concatenate([upper_min, np.zeros(len(self._cl), dtype=np.int64)])
            tags += [c.tag for c in self._cl]

        return ConstraintSystem(k, self.variables, A, const, modulus, signed, upper_min, tags, infeasible)


def _trace_row(value: CycNum, m: int, where: str) -> np.ndarray:
    """[Tr_{Q(zeta_m)/Q}(value * zeta_m^-l) for l in range(m)] as integers."""
    v = embed(value, m) if value.conductor != m else value
    return np.array([_trace_int(mul(v, from_root(m, -l)), where) for l in range(m)], dtype=np.int64)


def build_system(k: int, case: CaseAssignment, t: CharacterTable) -> ConstraintSystem:
    return SystemBuilder(t, k).build(case)


def trivial_case(t: CharacterTable, k: int, cls: str) -> CaseAssignment:
    """Case assignment induced by a genuine group element of class ``cls``."""
    choices = {}
    for d in divisors(k)[1:-1]:
        m = k // d
        target = t.power(cls, d)
        names = tuple(c.name for c in classes_of_order_dividing(t, m))
        choices[d] = AugTuple(m, names, tuple(int(n == target) for n in names))
    return CaseAssignment(k, choices)


def indicator(t: CharacterTable, k: int, cls: str) -> AugTuple:
    names = tuple(c.name for c in classes_of_order_dividing(t, k))
    return AugTuple(k, names, tuple(int(n == cls) for n in names))


def iter_cases(k: int, admissible: Mapping[int, Sequence[AugTuple]]) -> Iterable[CaseAssignment]:
    """Cartesian product of per-divisor choices, divisors ascending, the last
    divisor varying fastest."""
    proper = [d for d in divisors(k) if 1 < d < k]
    pools = [admissible[k // d] for d in proper]
    for combo in itertools.product(*pools):
        yield CaseAssignment(k, dict(zip(proper, combo)))


def case_count(k: int, admissible: Mapping[int, Sequence[AugTuple]]) -> int:
    return math.prod(len(admissible[k // d]) for d in divisors(k) if 1 < d < k)
