#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Each pair is checked for agreement first, then timed with the best of
``--repeat`` runs after one warm-up call (which absorbs JIT compilation).

Usage:
    python benchmarks/bench_kernels.py [--repeat R] [--omega-m M] [--radon-n N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spectral_gcv import green, kernels
from spectral_gcv.imaging.radon import SinogramGeometry, exact_cos_sin


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(args):
    rng = np.random.default_rng(0)
    # concentration event on noise that stays inside the band, so no early exit
    sq = np.ones((args.omega_runs, args.omega_m)) + 0.01 * rng.standard_normal((args.omega_runs, args.omega_m))
    yield (
        f"omega_check_batch runs={args.omega_runs} m={args.omega_m}",
        lambda: kernels.omega_check_batch_numba(sq, 1.0, 1.0 / 12.0, 1),
        lambda: kernels.omega_check_batch_numpy(sq, 1.0, 1.0 / 12.0, 1),
    )
    geo = SinogramGeometry.uniform(args.radon_n, args.radon_angles)
    c, s = exact_cos_sin(geo.angles)
    off = geo.offsets
    yield (
        f"radon_rows N={args.radon_n} angles={args.radon_angles}",
        lambda: kernels.radon_rows_numba(geo.N, c, s, off),
        lambda: kernels.radon_rows_numpy(geo.N, c, s, off),
    )
    t = green.build_matrices(args.jacobi_m)[3]
    yield (
        f"jacobi_eigh m={args.jacobi_m}",
        lambda: kernels.jacobi_eigh_numba(t, 1e-15, 100),
        lambda: kernels.jacobi_eigh_numpy(t, 1e-15, 100),
    )


def agree(a, b):
    if isinstance(a, tuple):
        return all(agree(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype == bool or np.issubdtype(a.dtype, np.integer):
        return np.array_equal(a, b)
    return np.allclose(a, b, rtol=1e-10, atol=1e-13)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--omega-m", type=int, default=512)
    p.add_argument("--omega-runs", type=int, default=200)
    p.add_argument("--radon-n", type=int, default=64)
    p.add_argument("--radon-angles", type=int, default=180)
    p.add_argument("--jacobi-m", type=int, default=32)
    args = p.parse_args()

    print(f"{'kernel':<40} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}  agree")
    for name, fast, slow in cases(args):
        if name.startswith("jacobi"):
            # rotation order may differ, compare the spectra only
            ok = np.allclose(np.sort(fast()[0]), np.sort(slow()[0]), rtol=1e-10, atol=0)
        else:
            ok = agree(fast(), slow())
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<40} {tf:>10.4f} {ts:>10.4f} {ts / tf:>8.1f}  {ok}")


if __name__ == "__main__":
    main()
