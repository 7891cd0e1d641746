#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the tilted Monte Carlo trial kernel (all five noise models) and
the lower-hull kernel.  Skips the compiled column when numba is missing
or disabled via CORRDET_NO_NUMBA=1.

Usage: python benchmarks/bench_montecarlo.py [--trials N] [--n N]
"""

import argparse
import time

import numpy as np

from corrdet import _kernels as K

CASES = {
    "gaussian": (0, 1.0, 0.0, 0.0),
    "laplacian": (1, 2.0, 0.0, 0.0),
    "binary": (2, 1.5, 0.0, 0.0),
    "uniform": (3, 2.0, 0.0, 0.0),
    "mixture": (4, 0.8, 1.0, 3.0),
}


def time_call(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--n", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    w = rng.normal(size=args.n)
    common = dict(
        lam=0.3, var_n=1.0, thresh=-1.0, log_norm=0.2, seed=42, n_tag=args.n,
        trials=args.trials,
    )
    have_numba = K.md_weights_numba is not None

    print(f"trial kernel: trials={args.trials} n={args.n} (best of 3, seconds)")
    header = f"{'model':<10} {'numpy':>10}"
    if have_numba:
        header += f" {'numba':>10} {'speedup':>10} {'max rel dev':>13}"
    print(header)
    for name, (mid, a0, a1, a2) in CASES.items():
        t_np, ref = time_call(lambda: K.md_weights_numpy(mid, a0, a1, a2, w, **common))
        row = f"{name:<10} {t_np:>10.4f}"
        if have_numba:
            fn = lambda: K.md_weights_numba(
                np.int64(mid), a0, a1, a2, w, common["lam"], common["var_n"],
                common["thresh"], common["log_norm"], np.uint64(common["seed"]),
                np.uint64(common["n_tag"]), np.int64(common["trials"]),
            )
            fn()  # compile outside the timed region
            t_nb, out = time_call(fn)
            dev = float(np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300)))
            row += f" {t_nb:>10.4f} {t_np / t_nb:>9.1f}x {dev:>13.2e}"
        print(row)

    x = np.sort(rng.uniform(0, 100, 100_000))
    y = np.log1p(x) + 0.02 * (x - 50) ** 2 + np.sin(x)
    t_np, ref = time_call(lambda: K.lower_hull_numpy(x, y))
    print(f"\nlower hull: points={x.size}")
    row = f"{'hull':<10} {t_np:>10.4f}"
    if have_numba:
        K.lower_hull_numba(x, y)
        t_nb, out = time_call(lambda: K.lower_hull_numba(x, y))
        same = np.array_equal(out, ref)
        row += f" {t_nb:>10.4f} {t_np / t_nb:>9.1f}x {'identical' if same else 'DIFFER':>13}"
    print(row)


if __name__ == "__main__":
    main()
