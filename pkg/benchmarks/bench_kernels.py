#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Both backends consume identical pre-drawn uniforms and must return
bit-identical results; this script checks that, then times them.

Run: python3 benchmarks/bench_kernels.py [--trials N] [--repeat K]
"""

import argparse
import time

import numpy as np

from mzqbc import codes, kernels


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_binding(trials, repeat):
    rng = np.random.default_rng(0)
    n = 8
    u_mode = rng.random((trials, n))
    u_mis = rng.random((trials, n))
    flips = np.array([0, 4], dtype=np.int64)
    args = (u_mode, u_mis, 0.5, 0.5, flips, 0.5)
    return "binding_counts", args, kernels._binding_counts_numba, kernels._binding_counts_numpy


def bench_concealing(trials, repeat):
    rng = np.random.default_rng(1)
    code = codes.extended_hamming_8_4()
    words = code.codewords()
    parities = codes.coset_parities(code, codes.bits_from_string("11100000"))
    cw_idx = rng.integers(len(words), size=trials).astype(np.int64)
    intercept = rng.random((trials, code.n)) < 0.5
    u_mis = rng.random((trials, code.n))
    args = (words, parities, cw_idx, intercept, u_mis, 0.5, 0.5)
    return "concealing_stats", args, kernels._concealing_stats_numba, kernels._concealing_stats_numpy


def bench_min_weight(k, repeat):
    rng = np.random.default_rng(2)
    code = codes.random_code(n=k + 8, k=k, rng=rng)
    masks = kernels.pack_rows(code.generator)
    args = (masks, code.n)
    return f"min_weight(k={k})", args, kernels._min_weight_numba, kernels._min_weight_numpy


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--min-weight-k", type=int, default=18)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        parser.error("numba not importable; benchmark needs both backends")

    cases = [
        bench_binding(args.trials, args.repeat),
        bench_concealing(args.trials, args.repeat),
        bench_min_weight(args.min_weight_k, args.repeat),
    ]
    print(f"{'kernel':<22} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, call_args, fn_nb, fn_np in cases:
        fn_nb(*call_args)  # JIT warm-up
        t_nb, out_nb = timeit(lambda: fn_nb(*call_args), args.repeat)
        t_np, out_np = timeit(lambda: fn_np(*call_args), args.repeat)
        if not np.array_equal(np.asarray(out_nb), np.asarray(out_np)):
            raise SystemExit(f"{name}: backend outputs differ!")
        print(f"{name:<22} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
