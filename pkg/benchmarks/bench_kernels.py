#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a realistic workload with both backends, checks the
outputs agree, and prints a timing table.  Usage:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from dcl import _kernels


def _time(fn, *args, repeat):
    fn(*args)  # warmup (JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    workloads = {
        "mi_trials": (
            rng.exponential(size=(400_000, 8)),
            rng.integers(0, 9, 400_000),
            rng.uniform(0.5, 3.0, 8),
        ),
        "parallel_rate_trials": (
            rng.exponential(size=(4_000, 200, 5)),
            rng.integers(0, 6, (4_000, 200)),
            0.01,
        ),
        "repetition_pair": (
            rng.exponential(size=(400_000, 8)),
            rng.integers(0, 9, 400_000),
            0.05,
        ),
    }

    if _kernels.NUMBA_IMPL is None:
        print("numba is not installed; only the numpy path is available")

    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, args_k in workloads.items():
        t_np = _time(_kernels.NUMPY_IMPL[name], *args_k, repeat=args.repeat)
        if _kernels.NUMBA_IMPL is None:
            print(f"{name:<22}{1e3 * t_np:>12.2f}{'-':>12}{'-':>9}")
            continue
        t_nb = _time(_kernels.NUMBA_IMPL[name], *args_k, repeat=args.repeat)
        a = _kernels.NUMPY_IMPL[name](*args_k)
        b = _kernels.NUMBA_IMPL[name](*args_k)
        if name == "repetition_pair":
            agree = np.allclose(a[0], b[0], rtol=1e-12) and np.allclose(a[1], b[1], rtol=1e-12)
        else:
            agree = np.allclose(a, b, rtol=1e-12)
        if not agree:
            raise SystemExit(f"backend mismatch in {name}")
        print(f"{name:<22}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
