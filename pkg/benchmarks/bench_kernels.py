#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the numpy fallback.

Times the three hot kernels in isolation and the full Monte Carlo link
simulation under each backend, and verifies on the way that both produce
bit-identical photon counts (the reproducibility contract that makes the
backend choice a pure speed decision).

Run:  python benchmarks/bench_kernels.py [--frames 50000]
"""

import argparse
import time

import numpy as np

from photon_ofdm import Scheme, WaveformConfig, default_channel
from photon_ofdm._kernels import available_backends
from photon_ofdm.channel import simulate_link


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(n_samples: int) -> None:
    backends = available_backends()
    rng = np.random.default_rng(0)
    y = rng.normal(2.0, 1.0, n_samples)
    lam = np.abs(rng.normal(40.0, 30.0, n_samples)) + 0.01

    print(f"\nelementwise kernels on {n_samples:,} samples (best of 5):")
    for name, mod in sorted(backends.items()):
        t_clip = _time(lambda: mod.biased_clip(y, 1.0, 4.0))
        t_rate = _time(lambda: mod.poisson_rates(y, 3.0e3, 1e-3))
        t_poi = _time(lambda: mod.poisson_counts(np.random.default_rng(7), lam))
        print(f"  {name:>6}: biased_clip {1e3 * t_clip:7.2f} ms   "
              f"poisson_rates {1e3 * t_rate:7.2f} ms   "
              f"poisson_counts {1e3 * t_poi:7.2f} ms")

    ref = backends["numpy"].poisson_counts(np.random.default_rng(7), lam)
    for name, mod in backends.items():
        got = mod.poisson_counts(np.random.default_rng(7), lam)
        assert np.array_equal(ref, got), f"backend {name} diverged"
    print("  photon counts bit-identical across backends: OK")


def bench_link(frames: int) -> None:
    from photon_ofdm import _kernels

    wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=4.0, epsilon_bias=2.0)
    ch = default_channel()
    results = {}
    print(f"\nfull link simulation, {frames:,} frames of 64 samples (best of 3):")
    saved = _kernels._active
    try:
        for name, mod in sorted(available_backends().items()):
            _kernels._active = mod
            results[name] = simulate_link(wf, ch, frames, seed=42)
            t = _time(lambda: simulate_link(wf, ch, frames, seed=42), repeats=3)
            print(f"  {name:>6}: {t:7.3f} s  ({frames / t:,.0f} frames/s)")
    finally:
        _kernels._active = saved
    names = sorted(results)
    if len(names) == 2:
        a, b = (results[n] for n in names)
        same = np.array_equal(a.residual_var, b.residual_var)
        print(f"  link statistics bit-identical across backends: {'OK' if same else 'MISMATCH'}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=2_000_000,
                        help="elementwise kernel benchmark size")
    parser.add_argument("--frames", type=int, default=50_000,
                        help="link benchmark frame count")
    args = parser.parse_args()
    print(f"available backends: {sorted(available_backends())}")
    bench_kernels(args.samples)
    bench_link(args.frames)


if __name__ == "__main__":
    main()
