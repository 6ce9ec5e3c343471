"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]

Covers the two loop-heavy kernels (cyclic Jacobi eigensolver, K-means
Lloyd iterations). The matmul-bound classifier forward/backward passes are
BLAS-dominated and gain nothing from JIT, so they are not duplicated here.
"""

import argparse
import time

import numpy as np

from fedgate import _kernels


def time_call(fn, *args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_jacobi(repeats):
    rows = []
    for n in (32, 64, 128, 256):
        rng = np.random.default_rng(n)
        a = rng.normal(size=(n, n))
        a = np.ascontiguousarray(0.5 * (a + a.T))
        _kernels.jacobi_eigh(a)  # trigger JIT before timing
        fast = time_call(_kernels.jacobi_eigh, a, repeats=repeats)
        slow = time_call(_kernels.jacobi_eigh_numpy, a, repeats=repeats)
        rows.append((f"jacobi_eigh {n}x{n}", fast, slow))
    return rows


def bench_kmeans(repeats):
    rows = []
    for n, d, k in ((5_000, 2, 10), (20_000, 2, 10), (20_000, 8, 20)):
        rng = np.random.default_rng(d)
        centers = rng.normal(scale=20.0, size=(k, d))
        x = np.ascontiguousarray(
            centers[rng.integers(0, k, n)] + rng.normal(size=(n, d))
        )
        uniforms = rng.random(k)
        init = x[_kernels.kmeanspp_select_numpy(x, uniforms)].copy()
        _kernels.lloyd(x, init.copy(), 300)
        fast = time_call(lambda: _kernels.lloyd(x, init.copy(), 300), repeats=repeats)
        slow = time_call(
            lambda: _kernels.lloyd_numpy(x, init.copy(), 300), repeats=repeats
        )
        rows.append((f"lloyd n={n} d={d} k={k}", fast, slow))

        _kernels.kmeanspp_select(x, uniforms)
        fast = time_call(_kernels.kmeanspp_select, x, uniforms, repeats=repeats)
        slow = time_call(_kernels.kmeanspp_select_numpy, x, uniforms, repeats=repeats)
        rows.append((f"kmeans++ n={n} d={d} k={k}", fast, slow))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _kernels.backend() != "numba":
        print(
            "active backend is numpy (numba missing or FEDGATE_PURE_NUMPY set); "
            "both columns will time the same code"
        )
    rows = bench_jacobi(args.repeats) + bench_kmeans(args.repeats)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(
            f"{name:<{width}}  {fast * 1e3:>8.2f}ms  {slow * 1e3:>8.2f}ms  "
            f"{slow / fast:>7.1f}x"
        )


if __name__ == "__main__":
    main()
