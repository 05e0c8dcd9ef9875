"""Time the compiled and numpy simulation kernels on the same workload.

Usage::

    python benchmarks/bench_kernel.py [--paths 100000] [--repeat 3]

Both kernels must return identical prices; the script checks that before
reporting timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sddm.core import JointGrowthModel
from sddm.oracle import SimConfig, available_kernels, simulate_joint_paths

# two-state joint law of the bundled geomean fixture (27 years: 7, 5, 6, 9)
MODEL = JointGrowthModel.from_table(
    (-0.05019, 0.0739),
    (-0.02627, 0.051),
    ((7 / 27, 5 / 27), (6 / 27, 9 / 27)),
    (0.5, 1.24),
    (0.06631, 0.07943),
)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--horizon", type=int, default=None, help="default: tail-bound rule")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cfg = SimConfig(n_paths=args.paths, seed=1, horizon=args.horizon)
    kernels = available_kernels()
    results = {k: simulate_joint_paths(MODEL, cfg, k) for k in kernels}
    ref = results[kernels[0]]
    for name, (pa, pb) in results.items():
        assert np.array_equal(pa, ref[0]) and np.array_equal(pb, ref[1]), f"{name} differs"

    horizon = cfg.resolve_horizon(MODEL)
    steps = args.paths * horizon
    print(f"paths={args.paths} horizon={horizon} path-steps={steps:,}")
    timings = {}
    for name in kernels:
        timings[name] = best_of(lambda: simulate_joint_paths(MODEL, cfg, name), args.repeat)
        print(f"{name:>8}: {timings[name]:8.3f} s  {steps / timings[name] / 1e6:8.1f} M steps/s")
    if "cython" in timings:
        print(f"speed-up: {timings['python'] / timings['cython']:.1f}x")
    else:
        print("compiled kernel not built; only the numpy kernel was timed")


if __name__ == "__main__":
    main()
