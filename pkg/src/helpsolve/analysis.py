"""Per-order pipeline: admissible sets, order elimination, spectrum and prime graphs.

Admissible sets are computed bottom-up in divisor order.  For an order k the
work items are the case assignments (one admissible tuple per proper power of
u); they are independent, so they may run in worker processes, and their
solution sets are merged by sorted union.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path
from typing import Callable, Sequence, TextIO

from .chartab import CharacterTable, _factor, classes_of_order_dividing
from .help_core import AugTuple, CaseAssignment, HelpError, SystemBuilder, divisors
from .solver import SolutionSet, classify_trivial, enumerate_solutions

__all__ = [
    "AdmissibleCache",
    "BudgetedRun",
    "EliminationReport",
    "ExpectedFile",
    "PrimeGraph",
    "admissible",
    "bundled_expected",
    "parse_expected",
    "prime_graph_G",
    "prime_graph_VZG",
    "report",
    "run_budgeted",
    "spectrum",
]

ELEMENT_ORDER = "element-order"
ELIMINATED = "eliminated"
OPEN = "open"
NOT_COMPUTED = "open (not computed)"

# orders whose case product exceeds this are skipped by spectrum unless budgeted
DEFAULT_CASE_LIMIT = 10**6


@dataclass(frozen=True)
class OrderResult:
    order: int
    solutions: SolutionSet
    case_count: int
    systems_built: int
    all_trivial: bool
    wall_time: float
    blocked_by: int | None = None


def _proper(k: int) -> list[int]:
    return [d for d in divisors(k) if 1 < d < k]


def _case_at(k: int, pools: Sequence[Sequence[AugTuple]], index: int) -> CaseAssignment:
    """Case number ``index`` of the product, last divisor varying fastest."""
    proper = _proper(k)
    picks = []
    for pool in reversed(pools):
        index, r = divmod(index, len(pool))
        picks.append(pool[r])
    return CaseAssignment(k, dict(zip(proper, reversed(picks))))


def _solve_range(builder: SystemBuilder, pools, start: int, stop: int):
    """Solve cases [start, stop); returns (solution rows, all_trivial)."""
    rows: set[tuple[int, ...]] = set()
    trivial = True
    for i in range(start, stop):
        case = _case_at(builder.k, pools, i)
        sol = enumerate_solutions(builder.build(case))
        if sol:
            rows.update(sol.rows())
            if trivial:
                chain = dict(case.choices)
                trivial = all(classify_trivial({**chain, 1: t}) for t in sol)
    return rows, trivial


_WORKER: dict = {}


def _worker_init(table: CharacterTable, k: int, pools) -> None:
    _WORKER["builder"] = SystemBuilder(table, k)
    _WORKER["pools"] = pools


def _worker_range(bounds: tuple[int, int]):
    return _solve_range(_WORKER["builder"], _WORKER["pools"], *bounds)


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    n = max(1, min(total, workers * 8))
    step = math.ceil(total / n)
    return [(s, min(s + step, total)) for s in range(0, total, step)]


class AdmissibleCache:
    """Memoized admissible sets of one character table, keyed by order."""

    def __init__(self, table: CharacterTable, workers: int = 1, case_limit: int | None = None):
        if workers < 1:
            raise ValueError("worker count must be at least 1")
        self.table = table
        self.workers = workers
        self.case_limit = case_limit
        self._results: dict[int, OrderResult] = {}
        self.systems_built = 0

    def __contains__(self, k: int) -> bool:
        return k in self._results

    def result(self, k: int) -> OrderResult:
        if k not in self._results:
            self._compute(k)
        return self._results[k]

    def get(self, k: int) -> SolutionSet:
        return self.result(k).solutions

    def pools(self, k: int) -> list[SolutionSet]:
        return [self.get(k // d) for d in _proper(k)]

    def case_count(self, k: int) -> int:
        # smallest sub-orders first, so an empty one stops before any huge one is solved
        total = 1
        for d in sorted(_proper(k), reverse=True):
            n = len(self.get(k // d))
            if not n:
                return 0
            total *= n
        return total

    def _compute(self, k: int) -> None:
        t = self.table
        if k < 1 or t.exponent % k:
            raise HelpError(f"{k} does not divide exp(G) = {t.exponent}")
        classes = tuple(c.name for c in classes_of_order_dividing(t, k))
        start = time.perf_counter()
        if k == 1:
            one = SolutionSet(1, (), (AugTuple(1, (), ()),))
            self._results[1] = OrderResult(1, one, 1, 0, True, 0.0)
            return
        # bottom-up: smaller orders first, stop at the first empty one
        for d in sorted(_proper(k), reverse=True):
            sub = self.result(k // d)
            if not sub.solutions:
                res = OrderResult(k, SolutionSet.empty(k, classes), 0, 0, True, time.perf_counter() - start, k // d)
                self._results[k] = res
                return
        pools = [list(p) for p in self.pools(k)]
        total = math.prod(len(p) for p in pools)
        if self.case_limit is not None and total > self.case_limit:
            raise HelpError(f"order {k} needs {total} cases, over the limit of {self.case_limit}")
        if self.workers == 1 or total < 2:
            rows, trivial = _solve_range(SystemBuilder(t, k), pools, 0, total)
        else:
            rows, trivial = set(), True
            with ProcessPoolExecutor(self.workers, initializer=_worker_init, initargs=(t, k, pools)) as ex:
                for r, tr in ex.map(_worker_range, _chunks(total, self.workers)):
                    rows |= r
                    trivial = trivial and tr
        self.systems_built += total
        sol = SolutionSet.from_rows(k, classes, rows)
        self._results[k] = OrderResult(k, sol, total, total, trivial, time.perf_counter() - start)


def admissible(k: int, t: CharacterTable, cache: AdmissibleCache | None = None) -> SolutionSet:
    """Partial augmentation tuples of order-k units allowed by every case."""
    cache = cache or AdmissibleCache(t)
    if cache.table is not t:
        raise HelpError("cache belongs to a different character table")
    return cache.get(k)


@dataclass(frozen=True)
class EliminationReport:
    order: int
    case_count: int
    solutions: SolutionSet
    eliminated: bool
    all_trivial: bool
    wall_time: float = field(default=0.0, compare=False)
    blocked_by: int | None = None

    def to_dict(self) -> dict:
        """JSON-ready form; timing is left out so reports stay comparable."""
        return {
            "order": self.order,
            "case_count": self.case_count,
            "eliminated": self.eliminated,
            "all_trivial": self.all_trivial,
            "blocked_by": self.blocked_by,
            "classes": list(self.solutions.classes),
            "solutions": [list(r) for r in self.solutions.rows()],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> EliminationReport:
        k = doc["order"]
        sol = SolutionSet.from_rows(k, doc["classes"], doc["solutions"])
        return cls(k, doc["case_count"], sol, doc["eliminated"], doc["all_trivial"], 0.0, doc["blocked_by"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        cases = f"{self.case_count} case" + ("" if self.case_count == 1 else "s")
        if self.blocked_by is not None:
            return f"order {self.order}: eliminated (no units of order {self.blocked_by}; 0 systems built)"
        if self.eliminated:
            return f"order {self.order}: eliminated (0 solutions over {cases})"
        kind = "all trivial" if self.all_trivial else "not all trivial"
        return f"order {self.order}: {len(self.solutions)} solutions over {cases} ({kind})"

    def to_text(self) -> str:
        lines = [self.summary()]
        if self.solutions:
            lines.append(format_table(self.solutions))
        return "\n".join(lines) + "\n"


def format_table(sol: SolutionSet) -> str:
    """Aligned columns, one tuple per row, headed by the class names."""
    head = [f"nu_{c}" for c in sol.classes]
    rows = [[str(v) for v in r] for r in sol.rows()]
    widths = [max(len(h), *(len(r[j]) for r in rows)) for j, h in zip(range(len(head)), head)]
    out = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    out += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def report(k: int, t: CharacterTable, cache: AdmissibleCache | None = None) -> EliminationReport:
    cache = cache or AdmissibleCache(t)
    res = cache.result(k)
    return EliminationReport(
        k,
        res.case_count,
        res.solutions,
        not res.solutions,
        res.all_trivial,
        res.wall_time,
        res.blocked_by,
    )


def spectrum(
    t: CharacterTable,
    cache: AdmissibleCache | None = None,
    case_limit: int = DEFAULT_CASE_LIMIT,
    budgeted: dict[int, "BudgetedRun"] | None = None,
) -> dict[int, str]:
    """Status of every divisor of exp(G).

    Orders whose case product exceeds ``case_limit`` are reported as
    not computed, unless a finished entry in ``budgeted`` settles them.
    """
    cache = cache or AdmissibleCache(t)
    budgeted = budgeted or {}
    orders = t.element_orders()
    status: dict[int, str] = {}
    for k in divisors(t.exponent):
        if k == 1:
            status[k] = ELEMENT_ORDER
            continue
        if any(status[d] == ELIMINATED for d in divisors(k)[1:-1]):
            status[k] = ELIMINATED
            continue
        if cache.case_count(k) > case_limit and k not in cache:
            run = budgeted.get(k)
            if run is not None and run.solutions:
                status[k] = ELEMENT_ORDER if k in orders else OPEN
            elif run is not None and run.complete:
                status[k] = ELIMINATED
            else:
                status[k] = ELEMENT_ORDER if k in orders else NOT_COMPUTED
            continue
        if not cache.get(k):
            status[k] = ELIMINATED
        else:
            status[k] = ELEMENT_ORDER if k in orders else OPEN
    return status


@dataclass(frozen=True)
class PrimeGraph:
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        for p, q in self.edges:
            if p >= q or p not in self.vertices or q not in self.vertices:
                raise ValueError(f"bad edge {(p, q)}")

    def __str__(self) -> str:
        vs = ",".join(map(str, sorted(self.vertices)))
        es = ", ".join(f"({p},{q})" for p, q in sorted(self.edges))
        return f"vertices {{{vs}}}, edges {{{es}}}"


def _primes(t: CharacterTable) -> list[int]:
    return sorted(_factor(t.group_order))


def prime_graph_G(t: CharacterTable) -> PrimeGraph:
    """Edge p-q iff some element has order divisible by pq."""
    ps = _primes(t)
    orders = t.element_orders()
    edges = {(p, q) for p in ps for q in ps if p < q and any(o % (p * q) == 0 for o in orders)}
    return PrimeGraph(frozenset(ps), frozenset(edges))


def prime_graph_VZG(t: CharacterTable, cache: AdmissibleCache | None = None) -> PrimeGraph:
    """Edge p-q iff units of order pq are not excluded."""
    cache = cache or AdmissibleCache(t)
    ps = _primes(t)
    edges = set()
    for p in ps:
        for q in ps:
            if p < q and t.exponent % (p * q) == 0 and cache.get(p * q):
                edges.add((p, q))
    return PrimeGraph(frozenset(ps), frozenset(edges))


# ---------------------------------------------------------------------------
# budgeted runs for orders with very large case products


@dataclass
class BudgetedRun:
    order: int
    case_total: int
    cases_done: int = 0
    solutions: set = field(default_factory=set)
    all_trivial: bool = True
    stop_reason: str | None = None

    @property
    def complete(self) -> bool:
        return self.cases_done >= self.case_total

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "case_total": self.case_total,
            "cases_done": self.cases_done,
            "all_trivial": self.all_trivial,
            "solutions": sorted(list(r) for r in self.solutions),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> BudgetedRun:
        return cls(
            doc["order"],
            doc["case_total"],
            doc["cases_done"],
            {tuple(r) for r in doc["solutions"]},
            doc["all_trivial"],
        )


def _save_checkpoint(path: Path, run: BudgetedRun) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(run.to_dict(), sort_keys=True) + "\n")
    os.replace(tmp, path)


def run_budgeted(
    k: int,
    t: CharacterTable,
    cache: AdmissibleCache | None = None,
    max_cases: int | None = None,
    max_secs: float | None = None,
    checkpoint: str | Path | None = None,
    stream: TextIO | None = None,
    checkpoint_every: int = 1000,
    clock: Callable[[], float] = time.monotonic,
) -> BudgetedRun:
    """Work through the cases of order k sequentially within the budget.

    New solution tuples are written to ``stream`` as they appear.  Progress is
    saved to ``checkpoint`` periodically and on exit; an existing checkpoint
    is resumed.
    """
    if max_cases is None and max_secs is None:
        raise HelpError("a budgeted run needs max_cases or max_secs")
    cache = cache or AdmissibleCache(t)
    pools = [list(p) for p in cache.pools(k)]
    total = math.prod(len(p) for p in pools)
    path = Path(checkpoint) if checkpoint else None
    if path is not None and path.exists():
        run = BudgetedRun.from_dict(json.loads(path.read_text()))
        if run.order != k or run.case_total != total:
            raise HelpError(f"checkpoint {path} belongs to a different run")
    else:
        run = BudgetedRun(k, total)
    if any(not p for p in pools):
        run.cases_done = total
    builder = SystemBuilder(t, k) if run.cases_done < total else None
    deadline = None if max_secs is None else clock() + max_secs
    done_here = 0
    for i in range(run.cases_done, total):
        if max_cases is not None and done_here >= max_cases:
            run.stop_reason = "case budget"
            break
        if deadline is not None and clock() >= deadline:
            run.stop_reason = "time budget"
            break
        rows, trivial = _solve_range(builder, pools, i, i + 1)
        for r in sorted(rows):
            if r not in run.solutions:
                run.solutions.add(r)
                if stream is not None:
                    stream.write(",".join(map(str, r)) + "\n")
                    stream.flush()
        run.all_trivial = run.all_trivial and trivial
        run.cases_done = i + 1
        done_here += 1
        if path is not None and done_here % checkpoint_every == 0:
            _save_checkpoint(path, run)
    if path is not None:
        _save_checkpoint(path, run)
    if run.complete:
        run.stop_reason = None
    return run


def solution_classes(t: CharacterTable, k: int) -> tuple[str, ...]:
    return tuple(c.name for c in classes_of_order_dividing(t, k))


# ---------------------------------------------------------------------------
# expected-tuple files


@dataclass(frozen=True)
class ExpectedFile:
    order: int | None
    classes: tuple[str, ...] | None
    rows: frozenset[tuple[int, ...]]


def parse_expected(text: str) -> ExpectedFile:
    """One comma-separated tuple per line; ``#`` starts a comment.  Header
    comments ``# order k`` and ``# classes a,b,...`` are picked up if present."""
    order = classes = None
    rows = set()
    for n, line in enumerate(text.splitlines(), 1):
        body, _, comment = line.partition("#")
        words = comment.split()
        if len(words) == 2 and words[0] == "order" and not body.strip():
            order = int(words[1])
        elif len(words) == 2 and words[0] == "classes" and not body.strip():
            classes = tuple(words[1].split(","))
        if not body.strip():
            continue
        try:
            rows.add(tuple(int(x) for x in body.split(",")))
        except ValueError:
            raise HelpError(f"line {n}: not a comma-separated integer tuple: {body.strip()!r}") from None
    return ExpectedFile(order, classes, frozenset(rows))


def _expected_dir():
    return files("helpsolve") / "data" / "expected"


def expected_manifest() -> dict[str, str]:
    return json.loads((_expected_dir() / "MANIFEST.json").read_text())


def bundled_expected_orders() -> list[int]:
    return sorted(int(name[5:-4]) for name in expected_manifest())


def bundled_expected(k: int, check: bool = True) -> ExpectedFile:
    """The bundled expected tuples of order k, checksum-verified."""
    name = f"order{k:02d}.txt"
    manifest = expected_manifest()
    if name not in manifest:
        raise HelpError(f"no bundled expected file for order {k}")
    data = (_expected_dir() / name).read_bytes()
    if check and hashlib.sha256(data).hexdigest() != manifest[name]:
        raise HelpError(f"checksum mismatch for bundled {name}")
    return parse_expected(data.decode())
