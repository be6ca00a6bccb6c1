"""Command-line driver.

Exit codes: 0 success, 1 verification failure, 2 usage or dataset error.
Every option can also be set through an environment variable named
HELPSOLVE_<OPTION>, e.g. HELPSOLVE_WORKERS=4; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .analysis import (
    DEFAULT_CASE_LIMIT,
    ELEMENT_ORDER,
    ELIMINATED,
    AdmissibleCache,
    _case_at,
    bundled_expected,
    bundled_expected_orders,
    parse_expected,
    prime_graph_G,
    prime_graph_VZG,
    report,
    run_budgeted,
    solution_classes,
    spectrum,
)
from .chartab import CharacterTable, DatasetError, bundled_dataset, load_dataset
from .help_core import HelpError, SystemBuilder

ENV_PREFIX = "HELPSOLVE_"
OK, FAIL, USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    dataset: str | None = None
    format: str = "text"
    workers: int = 1
    budget_cases: int | None = None
    budget_secs: float | None = None
    checkpoint: str | None = None
    timing: bool = False
    order: int | None = None
    case: int = 0
    expected: str | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise HelpError("--workers must be at least 1")
        if self.format not in ("text", "json", "csv"):
            raise HelpError(f"unknown format {self.format!r}")

    @property
    def budgeted(self) -> bool:
        return self.budget_cases is not None or self.budget_secs is not None


_OPTIONS = {
    "dataset": str,
    "format": str,
    "workers": int,
    "budget_cases": int,
    "budget_secs": float,
    "checkpoint": str,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps a flag given before the command from being reset by the subparser
    s = argparse.SUPPRESS
    p.add_argument("--dataset", default=s, help="character table JSON (default: bundled M22)")
    p.add_argument("--format", choices=("text", "json", "csv"), default=s)
    p.add_argument("--workers", type=int, default=s, help="worker processes for case splits")
    p.add_argument("--budget-cases", type=int, default=s, help="case limit for very large orders")
    p.add_argument("--budget-secs", type=float, default=s, help="time limit for very large orders")
    p.add_argument("--checkpoint", default=s, help="checkpoint file for budgeted runs")
    p.add_argument("--timing", action="store_true", default=s, help="report wall time on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helpsolve", description="HeLP constraint solver for torsion units.")
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-order", help="admissible partial augmentations of one order")
    p.add_argument("order", type=int)
    _add_common(p)

    p = sub.add_parser("spectrum", help="status of every divisor of the exponent")
    _add_common(p)

    p = sub.add_parser("kimmerle", help="compare the prime graphs of G and V(ZG)")
    _add_common(p)

    p = sub.add_parser("dump-constraints", help="print the constraint system of one case")
    p.add_argument("order", type=int)
    p.add_argument("--case", type=int, default=0, help="case index (default 0)")
    _add_common(p)

    p = sub.add_parser("verify", help="diff computed tuples against expected files")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--expected", default=None, help="expected-tuple file (default: bundled)")
    _add_common(p)
    return parser


def _config(ns: argparse.Namespace, env: dict[str, str]) -> RunConfig:
    values = {}
    for name, conv in _OPTIONS.items():
        if hasattr(ns, name):
            values[name] = getattr(ns, name)
        elif ENV_PREFIX + name.upper() in env:
            raw = env[ENV_PREFIX + name.upper()]
            try:
                values[name] = conv(raw)
            except ValueError:
                raise HelpError(f"{ENV_PREFIX}{name.upper()}={raw!r} is not a valid {conv.__name__}") from None
    timing = getattr(ns, "timing", False) or env.get(ENV_PREFIX + "TIMING", "") not in ("", "0")
    return RunConfig(
        command=ns.command,
        timing=timing,
        order=getattr(ns, "order", None),
        case=getattr(ns, "case", 0),
        expected=getattr(ns, "expected", None),
        **values,
    )


def _load(cfg: RunConfig) -> CharacterTable:
    return load_dataset(cfg.dataset) if cfg.dataset else bundled_dataset()


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _needs_budget(cache: AdmissibleCache, k: int) -> bool:
    return cache.case_count(k) > DEFAULT_CASE_LIMIT and k not in cache


def cmd_check_order(cfg: RunConfig, t: CharacterTable, out) -> int:
    k = cfg.order
    if t.exponent % k:
        raise HelpError(f"{k} does not divide exp(G) = {t.exponent}")
    cache = AdmissibleCache(t, cfg.workers)
    if _needs_budget(cache, k):
        if not cfg.budgeted:
            raise HelpError(
                f"order {k} needs {cache.case_count(k)} cases; pass --budget-cases or --budget-secs"
            )
        return _budgeted(cfg, t, cache, out)
    rep = report(k, t, cache)
    if cfg.format == "json":
        out.write(rep.to_json())
    elif cfg.format == "csv":
        out.write(_csv([rep.solutions.classes, *rep.solutions.rows()]))
    else:
        out.write(rep.to_text())
    return OK


def _budgeted(cfg: RunConfig, t: CharacterTable, cache: AdmissibleCache, out) -> int:
    k = cfg.order
    ckpt = cfg.checkpoint or f"helpsolve-order{k}.checkpoint.json"
    stream = out if cfg.format == "text" else None
    if stream is not None:
        out.write(f"# order {k}: streaming solutions; checkpoint {ckpt}\n")
        out.write(f"# classes {','.join(solution_classes(t, k))}\n")
    run = run_budgeted(k, t, cache, cfg.budget_cases, cfg.budget_secs, ckpt, stream)
    if cfg.format == "json":
        out.write(json.dumps({**run.to_dict(), "complete": run.complete}, indent=2, sort_keys=True) + "\n")
    elif cfg.format == "csv":
        out.write(_csv([solution_classes(t, k), *sorted(run.solutions)]))
    else:
        state = "complete" if run.complete else f"stopped by {run.stop_reason}"
        out.write(
            f"order {k}: {state} after {run.cases_done}/{run.case_total} cases; "
            f"{len(run.solutions)} solutions so far\n"
        )
    return OK


def cmd_spectrum(cfg: RunConfig, t: CharacterTable, out) -> int:
    cache = AdmissibleCache(t, cfg.workers)
    status = spectrum(t, cache)
    if cfg.format == "json":
        out.write(json.dumps({str(k): v for k, v in status.items()}, indent=2) + "\n")
        return OK
    if cfg.format == "csv":
        out.write(_csv([("order", "status"), *status.items()]))
        return OK
    width = len(str(max(status)))
    for k, v in status.items():
        out.write(f"{str(k).rjust(width)}  {v}\n")
    groups = {
        "element orders": [k for k, v in status.items() if v == ELEMENT_ORDER],
        "open": [k for k, v in status.items() if v not in (ELEMENT_ORDER, ELIMINATED)],
    }
    for name, ks in groups.items():
        out.write(f"# {name}: {{{', '.join(map(str, ks))}}}\n")
    out.write(f"# eliminated: {sum(v == ELIMINATED for v in status.values())} orders\n")
    return OK


def cmd_kimmerle(cfg: RunConfig, t: CharacterTable, out) -> int:
    g = prime_graph_G(t)
    v = prime_graph_VZG(t, AdmissibleCache(t, cfg.workers))
    ok = g == v
    if cfg.format == "json":
        doc = {
            "pass": ok,
            "G": {"vertices": sorted(g.vertices), "edges": sorted(map(list, g.edges))},
            "VZG": {"vertices": sorted(v.vertices), "edges": sorted(map(list, v.edges))},
        }
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    elif ok:
        out.write(f"PASS: {g} on both sides\n")
    else:
        out.write(f"FAIL: G has {g}; V(ZG) has {v}\n")
    return OK if ok else FAIL


def cmd_dump_constraints(cfg: RunConfig, t: CharacterTable, out) -> int:
    k = cfg.order
    if t.exponent % k:
        raise HelpError(f"{k} does not divide exp(G) = {t.exponent}")
    cache = AdmissibleCache(t, cfg.workers)
    pools = [list(p) for p in cache.pools(k)]
    total = cache.case_count(k)
    if not 0 <= cfg.case < total:
        raise HelpError(f"order {k} has {total} cases; case index {cfg.case} is out of range")
    case = _case_at(k, pools, cfg.case)
    sys_ = SystemBuilder(t, k).build(case)
    out.write(f"# order {k}, case {cfg.case} of {total}\n")
    for d, tup in case.choices.items():
        out.write(f"# u^{d}: ({', '.join(tup.classes)}) = {tup}\n")
    for line in sys_.render():
        out.write(line + "\n")
    return OK


def cmd_verify(cfg: RunConfig, t: CharacterTable, out) -> int:
    cache = AdmissibleCache(t, cfg.workers)
    if cfg.expected:
        exp = parse_expected(Path(cfg.expected).read_text())
        k = cfg.order if cfg.order is not None else exp.order
        if k is None:
            raise HelpError("the expected file has no '# order k' header; pass --order")
        jobs = [(k, exp)]
    else:
        orders = [cfg.order] if cfg.order is not None else bundled_expected_orders()
        jobs = [(k, bundled_expected(k)) for k in orders]
    failed = 0
    for k, exp in jobs:
        got = cache.get(k)
        if exp.classes is not None and exp.classes != got.classes:
            raise HelpError(f"order {k}: expected file columns {exp.classes} differ from {got.classes}")
        rows = set(got.rows())
        missing = sorted(exp.rows - rows)
        extra = sorted(rows - exp.rows)
        if missing or extra:
            failed += 1
            out.write(f"FAIL order {k}: {len(missing)} missing, {len(extra)} extra\n")
            for r in missing:
                out.write(f"  - {','.join(map(str, r))}\n")
            for r in extra:
                out.write(f"  + {','.join(map(str, r))}\n")
        else:
            out.write(f"PASS order {k}: {len(rows)} tuples\n")
    return FAIL if failed else OK


COMMANDS = {
    "check-order": cmd_check_order,
    "spectrum": cmd_spectrum,
    "kimmerle": cmd_kimmerle,
    "dump-constraints": cmd_dump_constraints,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None, env: dict[str, str] | None = None, out=None) -> int:
    out = out or sys.stdout
    env = dict(os.environ) if env is None else env
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    start = time.perf_counter()
    try:
        cfg = _config(ns, env)
        t = _load(cfg)
        code = COMMANDS[cfg.command](cfg, t, out)
    except DatasetError as e:
        print(f"dataset error: {e}", file=sys.stderr)
        return USAGE
    except (HelpError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    if cfg.timing:
        print(f"# wall time {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


def main_entry() -> None:
    sys.exit(main())
