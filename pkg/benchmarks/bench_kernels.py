#!/usr/bin/env python3
"""Benchmark the SSIM windowed-moment kernels: compiled vs numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from venus._kernels import available_backends, gaussian_taps

SIZES = [(128, 128), (256, 256), (512, 512), (720, 1280)]


def time_backend(module, x, y, taps, repeats: int) -> float:
    module.window_moments(x, y, taps)  # warm-up / JIT-free sanity
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        module.window_moments(x, y, taps)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    taps = gaussian_taps(11, 1.5)
    rng = np.random.default_rng(0)

    print(f"backends: {', '.join(backends)}")
    header = f"{'size':>12} " + " ".join(f"{name:>12}" for name in backends)
    if len(backends) > 1:
        header += f" {'speedup':>9}"
    print(header)

    for height, width in SIZES:
        x = rng.uniform(0, 255, (height, width))
        y = rng.uniform(0, 255, (height, width))
        timings = {
            name: time_backend(module, x, y, taps, args.repeats)
            for name, module in backends.items()
        }
        row = f"{height}x{width:>6} " + " ".join(
            f"{timings[name] * 1e3:>10.2f}ms" for name in backends
        )
        if "numpy" in timings and "cython" in timings:
            row += f" {timings['numpy'] / timings['cython']:>8.2f}x"
        print(row)

    if len(backends) > 1:
        x = rng.uniform(0, 255, (96, 120))
        y = rng.uniform(0, 255, (96, 120))
        planes = [module.window_moments(x, y, taps) for module in backends.values()]
        worst = max(
            float(np.max(np.abs(a - b))) for a, b in zip(planes[0], planes[1])
        )
        print(f"max abs disagreement between backends: {worst:.3e}")


if __name__ == "__main__":
    main()
