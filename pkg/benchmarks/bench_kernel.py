#!/usr/bin/env python3
"""Benchmark the compiled tree-scan kernel against the pure-Python fallback.

Usage:
    python benchmarks/bench_kernel.py [--max-m 8] [--workers 4] [--seed 0]

Times free_norm on random q-metric spaces with random dense molecules for
m = 5..max_m with each available backend, then reports the thread scaling of
the compiled kernel at max_m.
"""

import argparse
import time

import numpy as np

from freep import Molecule, available_backends, free_norm, random_p_metric, rooted_tree_count


def bench_once(space, molecule, p, backend, workers):
    t0 = time.perf_counter()
    result = free_norm(space, molecule, p, backend=backend, workers=workers)
    return time.perf_counter() - t0, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-m", type=int, default=8)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'m':>3} {'trees':>9} " + " ".join(f"{b:>12}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))

    p = 0.5
    for m in range(5, args.max_m + 1):
        rng = np.random.default_rng([args.seed, m])
        space = random_p_metric(m, 0.5, rng)
        molecule = Molecule({i: c for i, c in enumerate(rng.uniform(-1.0, 1.0, m))
                             if i != 0})
        times = {}
        value = None
        for backend in backends:
            elapsed, result = bench_once(space, molecule, p, backend, workers=1)
            times[backend] = elapsed
            if value is None:
                value = result.p_power
            elif result.p_power != value:
                raise AssertionError(f"backends disagree at m={m}")
        row = f"{m:>3} {rooted_tree_count(m):>9} " \
            + " ".join(f"{times[b] * 1000:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"   {times['pure'] / times['compiled']:>7.1f}x"
        print(row)

    if "compiled" in backends:
        m = args.max_m + 1
        rng = np.random.default_rng([args.seed, m])
        space = random_p_metric(m, 0.5, rng)
        molecule = Molecule({i: c for i, c in enumerate(rng.uniform(-1.0, 1.0, m))
                             if i != 0})
        t1, r1 = bench_once(space, molecule, p, "compiled", workers=1)
        tw, rw = bench_once(space, molecule, p, "compiled", workers=args.workers)
        assert r1.p_power == rw.p_power
        print(f"\ncompiled kernel at m={m} ({rooted_tree_count(m)} trees): "
              f"1 worker {t1:.3f}s, {args.workers} workers {tw:.3f}s "
              f"(speedup {t1 / tw:.2f}x)")


if __name__ == "__main__":
    main()
