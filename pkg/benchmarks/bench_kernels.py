#!/usr/bin/env python3
"""Benchmark the compiled episode kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--trials N] [--horizon N]

Outputs one line per (workload, backend) with throughput, plus the speedup.
Both backends produce bit-identical results (asserted here on a subsample),
so the choice is purely about speed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from devlab import random_walk
from devlab._kernels import _py

try:
    from devlab._kernels import _native
except ImportError:
    _native = None

SEED = 1234


def _time(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def bench_adj(trials: int, horizon: int):
    rules = ((_py.K_HONEST, 0.0), (_py.K_HONEST, 0.0))
    args = (0.1, horizon, rules, SEED, 0, trials)
    rows = []
    t_py, out_py = _time(_py.adj_batch, *args)
    rows.append(("adjacent_ones", "python", t_py, trials * horizon / t_py))
    if _native is not None:
        t_c, out_c = _time(_native.adj_batch, *args)
        rows.append(("adjacent_ones", "native", t_c, trials * horizon / t_c))
        assert all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
    return rows


def bench_walk(trials: int, horizon: int):
    rules = ((_py.K_HONEST, 0.0, 0.0), (_py.K_HONEST, 0.0, 0.0))
    args = (10, horizon, rules, SEED, 0, trials)
    rows = []
    t_py, hit_py = _time(_py.rw_scan, *args)
    rows.append(("walk_scan", "python", t_py, trials / t_py))
    if _native is not None:
        t_c, hit_c = _time(_native.rw_scan, *args)
        rows.append(("walk_scan", "native", t_c, trials / t_c))
        assert np.array_equal(hit_py, hit_c)
        idx = np.nonzero(hit_c < 0)[0].astype(np.int64)
    else:
        idx = np.nonzero(hit_py < 0)[0].astype(np.int64)
    idx = idx[:200]
    if len(idx):
        tables = random_walk.weight_tables(horizon // 2)
        stat_args = (10, horizon, rules, SEED, idx, 100, tables)
        t_py, out_py = _time(_py.rw_stats_batch, *stat_args)
        rows.append(("walk_stats", "python", t_py, len(idx) / t_py))
        if _native is not None:
            t_c, out_c = _time(_native.rw_stats_batch, *stat_args)
            rows.append(("walk_stats", "native", t_c, len(idx) / t_c))
            assert all(
                np.array_equal(a, b, equal_nan=True) for a, b in zip(out_py, out_c)
            )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--horizon", type=int, default=20000)
    args = parser.parse_args()

    if _native is None:
        print("note: native extension not built; benchmarking fallback only")
    rows = bench_adj(args.trials, args.horizon) + bench_walk(args.trials, args.horizon)
    unit = {"adjacent_ones": "periods/s", "walk_scan": "episodes/s", "walk_stats": "episodes/s"}
    print(f"{'workload':<14} {'backend':<8} {'seconds':>9} {'throughput':>14}")
    for name, backend, seconds, rate in rows:
        print(f"{name:<14} {backend:<8} {seconds:>9.3f} {rate:>11.3g} {unit[name]}")
    by_key = {(n, b): s for n, b, s, _ in rows}
    for name in ("adjacent_ones", "walk_scan", "walk_stats"):
        if (name, "native") in by_key:
            print(f"speedup {name}: {by_key[(name, 'python')] / by_key[(name, 'native')]:.1f}x")


if __name__ == "__main__":
    main()
