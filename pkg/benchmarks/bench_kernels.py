"""Time the numba kernels against the pure numpy fallback.

Problems are the reduced systems of real M22 cases (order 8, every case;
order 12, every ``--stride``-th case).  Both backends are run in-process on
identical inputs and their outputs compared.  With ``--end-to-end`` the full
order-12 solve is also timed in two subprocesses, one with
HELPSOLVE_DISABLE_NUMBA=1.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--stride 5] [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from helpsolve import _kernels
from helpsolve.analysis import AdmissibleCache, _case_at
from helpsolve.chartab import bundled_dataset
from helpsolve.help_core import SystemBuilder
from helpsolve.solver import _reduced, propagate_bounds


def problems(stride):
    t = bundled_dataset()
    cache = AdmissibleCache(t)
    out = []
    for k, step in ((8, 1), (12, stride)):
        b = SystemBuilder(t, k)
        pools = [list(p) for p in cache.pools(k)]
        for i in range(0, cache.case_count(k), step):
            sys_ = b.build(_case_at(k, pools, i))
            if sys_.infeasible:
                continue
            box = propagate_bounds(sys_)
            if not box.is_empty():
                out.append(_reduced(sys_, box))
    return out


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def run_kernels(probs, repeat):
    def prop(kernel):
        for A, b, lower, upper, _, _, _ in probs:
            n = A.shape[1]
            kernel(A, b, lower, upper, np.full(n, -np.inf), np.full(n, np.inf), 1000)

    clipped = [(A, b, *_kernels._clip_bounds(lo_, up_), m, lo, hi) for A, b, lo_, up_, m, lo, hi in probs]

    def dfs_np():
        return [_kernels._dfs_np(*p) for p in clipped]

    def dfs_nb():
        return [_kernels.dfs_enumerate(*p) for p in probs]

    assert all(np.array_equal(x, y) for x, y in zip(dfs_np(), dfs_nb())), "backends disagree"
    prop(_kernels._propagate_nb)  # compile outside the timed region

    rows = [
        ("propagate", best_of(lambda: prop(_kernels._propagate_nb), repeat), best_of(lambda: prop(_kernels._propagate_np), repeat)),
        ("enumerate", best_of(dfs_nb, repeat), best_of(dfs_np, repeat)),
    ]
    print(f"{len(probs)} reduced systems, backend {_kernels.backend()}, best of {repeat}")
    print(f"{'kernel':<10} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for name, nb, np_ in rows:
        print(f"{name:<10} {nb:9.3f} {np_:9.3f} {np_ / nb:7.1f}x")


def end_to_end():
    code = "from helpsolve.analysis import AdmissibleCache; from helpsolve.chartab import bundled_dataset; AdmissibleCache(bundled_dataset()).get(12)"
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, HELPSOLVE_DISABLE_NUMBA=flag)
        start = time.perf_counter()
        subprocess.run([sys.executable, "-c", code], env=env, check=True)
        print(f"order 12 end to end, {label}: {time.perf_counter() - start:.1f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--stride", type=int, default=5, help="use every n-th order-12 case")
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is disabled or missing; nothing to compare")
    run_kernels(problems(args.stride), args.repeat)
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
