"""Compiled vs numpy span kernel: throughput and agreement.

    python3 benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import time

import numpy as np

from isrsgn import kernels
from isrsgn.core import ChannelPlan, FiberParams
from isrsgn.integral import DEFAULT_QUAD, phase_coefficient, span_profile


def workload(n_points: int, seed: int = 1):
    fiber = FiberParams.from_engineering()
    freqs = 191.4e12 + 100e9 * np.arange(48)
    plan = ChannelPlan.from_absolute(freqs, np.full(48, 64e9), np.full(48, 1e-3))
    rng = np.random.default_rng(seed)
    half = 0.5 * plan.total_bandwidth
    f1, f2, fi = rng.uniform(-half, half, (3, n_points))
    prof = span_profile(plan, fiber, DEFAULT_QUAD.zeta_points)
    omega = phase_coefficient(f1, f2, fi, fiber)
    s = f1 + f2 - fi
    return omega, s, prof, fiber


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    omega, s, prof, fiber = workload(args.points)
    results = {}
    for name in kernels.available_backends():
        fn = kernels.get_backend(name)
        t, out = best_of(lambda: fn(omega, s, prof.x, prof.inv_norm, fiber.alpha, prof.dz), args.repeat)
        results[name] = out
        print(f"{name:>7}: {t:8.3f} s  {1e6 * t / args.points:7.3f} us/point")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        rel = np.max(np.abs(cy - py) / np.maximum(np.abs(py), 1e-300))
        print(f"max relative difference: {rel:.2e}")
    else:
        print("compiled backend unavailable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
