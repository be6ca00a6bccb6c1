"""Character table data model and dataset loader.

A dataset is a JSON document holding the conjugacy classes of a finite group
(with element orders and sizes), its power maps, the ordinary irreducible
characters and, per prime, the irreducible Brauer characters restricted to the
p-regular classes.  Every invariant is checked eagerly on load.

Value grammar inside ``values`` lists::

    value    := integer | {"n": conductor, "coeffs": {exponent: integer, ...}}

where the object form denotes sum(coeff * zeta_n ** exponent).  Exponents are
JSON object keys and therefore strings; coefficients may also be given as
``"p/q"`` strings for rational values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from .cyclotomic import CycNum, conjugate, galois, mul

__all__ = [
    "Character",
    "CharacterTable",
    "ConjClass",
    "DatasetError",
    "PowerMap",
    "bundled_dataset",
    "classes_of_order_dividing",
    "load_dataset",
    "p_regular_classes",
    "parse_table",
    "validate_orthogonality",
]


class DatasetError(ValueError):
    """A dataset failed to parse or violated an invariant.

    ``check`` names the failed check and ``where`` the offending class or
    character.
    """

    def __init__(self, check: str, where: str, expected: Any = None, actual: Any = None):
        self.check = check
        self.where = where
        self.expected = expected
        self.actual = actual
        msg = f"{check} failed at {where}"
        if expected is not None or actual is not None:
            msg += f": expected {expected}, got {actual}"
        super().__init__(msg)


@dataclass(frozen=True)
class ConjClass:
    name: str
    element_order: int
    size: int


@dataclass(frozen=True)
class PowerMap:
    prime: int
    images: tuple[int, ...]


@dataclass(frozen=True)
class Character:
    id: str
    degree: int
    values: tuple[CycNum, ...]
    classes: tuple[str, ...]
    # 0 for ordinary characters, otherwise the characteristic
    p: int = 0

    @property
    def kind(self) -> str:
        return "ordinary" if self.p == 0 else f"brauer({self.p})"

    def value(self, cls: str) -> CycNum:
        try:
            return self.values[self.classes.index(cls)]
        except ValueError:
            raise KeyError(f"{self.id} ({self.kind}) is not defined on class {cls}") from None

    def defined_on(self, cls: str) -> bool:
        return cls in self.classes


@dataclass(frozen=True)
class CharacterTable:
    group_name: str
    group_order: int
    exponent: int
    classes: tuple[ConjClass, ...]
    power_maps: dict[int, PowerMap]
    ordinary: tuple[Character, ...]
    brauer: dict[int, tuple[Character, ...]] = field(default_factory=dict)

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)

    def index(self, name: str) -> int:
        return self.class_names.index(name)

    def get_class(self, name: str) -> ConjClass:
        return self.classes[self.index(name)]

    def order_of(self, name: str) -> int:
        return self.get_class(name).element_order

    def power(self, name: str, e: int) -> str:
        """Class containing g**e for g in class ``name``, via prime power maps."""
        idx = self.index(name)
        e %= self.classes[idx].element_order
        if e == 0:
            return self.classes[self._identity_index()].name
        for p, mult in _factor(e).items():
            if p not in self.power_maps:
                raise KeyError(f"no power map for prime {p}")
            for _ in range(mult):
                idx = self.power_maps[p].images[idx]
        return self.classes[idx].name

    def _identity_index(self) -> int:
        for i, c in enumerate(self.classes):
            if c.element_order == 1:
                return i
        raise DatasetError("identity", "classes", "a class of order 1", "none")

    def characters(self, p: int = 0) -> tuple[Character, ...]:
        return self.ordinary if p == 0 else self.brauer[p]

    def element_orders(self) -> set[int]:
        return {c.element_order for c in self.classes}


def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _parse_value(raw: Any, where: str) -> CycNum:
    if isinstance(raw, bool):
        raise DatasetError("parse", where, "integer or cyclotomic object", raw)
    if isinstance(raw, int):
        return CycNum.rational(raw)
    if isinstance(raw, str):
        return CycNum.rational(Fraction(raw))
    if isinstance(raw, dict) and set(raw) == {"n", "coeffs"}:
        n = raw["n"]
        if not isinstance(n, int) or n < 1:
            raise DatasetError("parse", where, "positive conductor", n)
        try:
            terms = {int(e): Fraction(c) for e, c in raw["coeffs"].items()}
        except (TypeError, ValueError, AttributeError) as exc:
            raise DatasetError("parse", where, "exponent -> coefficient map", raw["coeffs"]) from exc
        return CycNum.from_exponents(n, terms)
    raise DatasetError("parse", where, "integer or cyclotomic object", raw)


def _minimal_conductor_divides(value: CycNum, m: int) -> bool:
    """True when the value lies in Q(zeta_m) (m possibly smaller than the
    conductor it is stored at)."""
    n = value.conductor
    if m % n == 0:
        return True
    g = math.gcd(n, m)
    # x lies in Q(zeta_g) iff it is fixed by every automorphism that fixes zeta_g
    for j in range(1, n):
        if math.gcd(j, n) == 1 and j % g == 1 % g:
            if galois(value, j) != value:
                return False
    return True


def _parse_characters(raw_chars: Sequence[dict], class_names: tuple[str, ...], p: int, where: str):
    chars = []
    for pos, rc in enumerate(raw_chars):
        cid = rc.get("id", f"chi_{pos + 1}")
        loc = f"{where}/{cid}"
        if "degree" not in rc or "values" not in rc:
            raise DatasetError("parse", loc, "keys degree and values", sorted(rc))
        vals = rc["values"]
        if len(vals) != len(class_names):
            raise DatasetError("value count", loc, len(class_names), len(vals))
        values = tuple(_parse_value(v, f"{loc}@{c}") for v, c in zip(vals, class_names))
        chars.append(Character(cid, int(rc["degree"]), values, class_names, p))
    return tuple(chars)


def parse_table(doc: dict) -> CharacterTable:
    """Build and validate a table from an already-decoded JSON document."""
    try:
        grp = doc["group"]
        name, order, exponent = grp["name"], int(grp["order"]), int(grp["exponent"])
        classes = tuple(
            ConjClass(str(c["name"]), int(c["order"]), int(c["size"])) for c in doc["classes"]
        )
    except (KeyError, TypeError) as exc:
        raise DatasetError("parse", "header", "group/classes sections", repr(exc)) from exc
    names = tuple(c.name for c in classes)
    if len(set(names)) != len(names):
        raise DatasetError("unique class names", "classes", "distinct", names)

    power_maps = {}
    for key, images in doc.get("power_maps", {}).items():
        p = int(key)
        if len(images) != len(classes):
            raise DatasetError("power map length", f"p={p}", len(classes), len(images))
        power_maps[p] = PowerMap(p, tuple(int(i) for i in images))

    ordinary = _parse_characters(doc.get("ordinary", []), names, 0, "ordinary")
    brauer = {}
    for key, block in doc.get("brauer", {}).items():
        p = int(key)
        bcls = tuple(block["classes"])
        unknown = [c for c in bcls if c not in names]
        if unknown:
            raise DatasetError("brauer classes", f"p={p}", "known class names", unknown)
        brauer[p] = _parse_characters(block["characters"], bcls, p, f"brauer({p})")

    table = CharacterTable(name, order, exponent, classes, power_maps, ordinary, brauer)
    _validate(table)
    return table


def _validate(t: CharacterTable) -> None:
    size_sum = sum(c.size for c in t.classes)
    if size_sum != t.group_order:
        raise DatasetError("class sizes sum to |G|", "classes", t.group_order, size_sum)
    exp = math.lcm(*(c.element_order for c in t.classes))
    if exp != t.exponent:
        raise DatasetError("exponent = lcm of element orders", "classes", t.exponent, exp)
    for c in t.classes:
        if t.group_order % c.size:
            raise DatasetError("class size divides |G|", c.name, f"divisor of {t.group_order}", c.size)

    for p, pm in t.power_maps.items():
        for i, img in enumerate(pm.images):
            if not 0 <= img < len(t.classes):
                raise DatasetError("power map index", f"p={p} {t.classes[i].name}", "valid index", img)
            m = t.classes[i].element_order
            want = m // math.gcd(m, p)
            got = t.classes[img].element_order
            if got != want:
                raise DatasetError("power map order", f"p={p} {t.classes[i].name}", want, got)
    for p in _factor(t.exponent):
        if p not in t.power_maps:
            raise DatasetError("power maps present", f"p={p}", "a power map", "missing")

    ident = t.classes[t._identity_index()].name
    for chars in (t.ordinary, *t.brauer.values()):
        for ch in chars:
            _check_character(t, ch, ident)
    for p, chars in t.brauer.items():
        for cname in chars[0].classes if chars else ():
            if t.order_of(cname) % p == 0:
                raise DatasetError("p-regular classes", f"brauer({p})", "order prime to p", cname)
        if chars:
            want = tuple(c.name for c in p_regular_classes(t, p))
            if chars[0].classes != want:
                raise DatasetError("p-regular classes", f"brauer({p})", want, chars[0].classes)

    if t.ordinary:
        if len(t.ordinary) != len(t.classes):
            raise DatasetError("number of irreducibles", "ordinary", len(t.classes), len(t.ordinary))
        deg2 = sum(ch.degree**2 for ch in t.ordinary)
        if deg2 != t.group_order:
            raise DatasetError("sum of squared degrees", "ordinary", t.group_order, deg2)
        report = validate_orthogonality(t)
        if not report.ok:
            raise DatasetError("orthogonality", report.pair, report.expected, report.actual)


def _check_character(t: CharacterTable, ch: Character, ident: str) -> None:
    if ch.value(ident) != ch.degree:
        raise DatasetError("degree", ch.id, ch.degree, ch.value(ident))
    for cname, v in zip(ch.classes, ch.values):
        m = t.order_of(cname)
        if not _minimal_conductor_divides(v, m):
            raise DatasetError("conductor discipline", f"{ch.id}@{cname}", f"value in Q(zeta_{m})", v)


@dataclass(frozen=True)
class OrthogonalityReport:
    ok: bool
    pairs_checked: int
    pair: str = ""
    expected: int | None = None
    actual: Fraction | None = None


def _inner_product_sum(t: CharacterTable, a: Character, b: Character) -> Fraction:
    """sum over classes of |C| * a(C) * conj(b(C)); exact and rational."""
    total = CycNum.rational(0)
    for cls, va, vb in zip(t.classes, a.values, b.values):
        total = total + mul(va, conjugate(vb)) * cls.size
    if not total.is_rational():
        raise DatasetError("orthogonality", f"({a.id},{b.id})", "rational inner product", total)
    return total.to_rational()


def validate_orthogonality(t: CharacterTable) -> OrthogonalityReport:
    """First orthogonality relation over the ordinary table, exact."""
    checked = 0
    chars = t.ordinary
    for i, a in enumerate(chars):
        for b in chars[i:]:
            got = _inner_product_sum(t, a, b)
            want = t.group_order if a is b else 0
            checked += 1
            if got != want:
                return OrthogonalityReport(False, checked, f"({a.id},{b.id})", want, got)
    return OrthogonalityReport(True, checked)


def inner_product(t: CharacterTable, a: Character, b: Character) -> Fraction:
    return _inner_product_sum(t, a, b) / t.group_order


def p_regular_classes(t: CharacterTable, p: int) -> tuple[ConjClass, ...]:
    return tuple(c for c in t.classes if c.element_order % p)


def classes_of_order_dividing(t: CharacterTable, k: int) -> tuple[ConjClass, ...]:
    """Non-identity classes whose element order divides k, in dataset order."""
    return tuple(c for c in t.classes if c.element_order > 1 and k % c.element_order == 0)


def load_dataset(path: str | Path) -> CharacterTable:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8-sig"))
    except json.JSONDecodeError as exc:
        raise DatasetError("parse", str(path), "valid JSON", str(exc)) from exc
    return parse_table(doc)


def bundled_dataset(name: str = "M22") -> CharacterTable:
    ref = resources.files("helpsolve") / "data" / f"{name}.json"
    with resources.as_file(ref) as p:
        return load_dataset(p)
