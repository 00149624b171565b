"""Compiled vs numpy kernels.

Times the hot kernels and one full tree seeding under each backend and
prints a small table. Usage::

    python benchmarks/bench_kernels.py [--n 50000] [--d 50] [--k 100] [--repeats 3]
"""

import argparse
import contextlib
import time

import numpy as np

from fastcoreset import kernels
from fastcoreset.datagen import gen_gaussian_mixture
from fastcoreset.solvers import tree_seed

SEEDING_KERNELS = ("block_sums", "tree_draw", "tree_insert", "tree_propose", "assign_sq")


@contextlib.contextmanager
def backend(name):
    # modules look kernels up by attribute, so swapping them here is enough
    saved = {fn: getattr(kernels, fn) for fn in SEEDING_KERNELS}
    try:
        for fn in SEEDING_KERNELS:
            setattr(kernels, fn, kernels.get(fn, name))
        yield
    finally:
        for fn, impl in saved.items():
            setattr(kernels, fn, impl)


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50_000)
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    X, _ = gen_gaussian_mixture(args.n, args.k, 1.0, d=args.d, seed=0)
    C = np.ascontiguousarray(X[:: max(1, args.n // args.k)][: args.k])
    side = float(np.ptp(X)) / 64
    origin = X.min(0) - 0.5 * side
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])

    cases = {
        "assign_sq": lambda b: (lambda: kernels.get("assign_sq", b)(X, C)),
        "count_cells": lambda b: (lambda: kernels.get("count_cells", b)(X, origin, side, args.n)),
        "tree_seed": lambda b: (lambda: _seed_with(b, X, args.k)),
    }
    print(f"n={args.n} d={args.d} k={args.k}, best of {args.repeats}")
    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, make in cases.items():
        times = [best_of(make(b), args.repeats) for b in backends]
        row = f"{name:<12}" + "".join(f"{t:>11.4f}s" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)
    if len(backends) == 1:
        print("compiled kernels unavailable; only the numpy backend was timed")


def _seed_with(name, X, k):
    with backend(name):
        tree_seed(X, k, seed=0)


if __name__ == "__main__":
    main()
