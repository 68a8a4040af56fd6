"""Benchmark the numba kernel against the pure-numpy fallback.

Times the hot path (per-path Monte Carlo moments) and the raw cluster
kernel on both backends and verifies they produce identical results.

    python bench/bench_backends.py [--num 400000] [--repeats 3]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from smartp import MissingnessParams, OutcomeModel, SkewTParams, default_car_model
from smartp._backend import HAVE_NUMBA, _ybar_numba, _ybar_numpy, set_backend
from smartp.moments import estimate_path_moments


def time_call(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--num", type=int, default=400_000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    model = OutcomeModel(
        default_car_model(),
        SkewTParams(0.0, 0.95, 2.0, 8.0),
        MissingnessParams(-1.0, 0.5),
    )
    mu = np.full(28, 2.0)

    # raw kernel comparison on one batch
    rng = np.random.default_rng(0)
    n = 100_000
    zq = rng.standard_normal((n, 28))
    e0 = rng.standard_normal((n, 28))
    e1 = rng.standard_normal((n, 28))
    mu2d = np.tile(mu, (n, 1))
    kernel_args = (zq, e0, e1, model.sigma.chol, mu2d, -1.0, 0.5, 1.0, 0.0)

    print(f"cluster kernel, one {n}-replicate batch (best of {args.repeats}):")
    t_np, out_np = time_call(lambda: _ybar_numpy(*kernel_args), args.repeats)
    print(f"  numpy  {t_np * 1e3:8.1f} ms")
    if HAVE_NUMBA:
        _ybar_numba(*kernel_args)  # JIT warm-up
        t_nb, out_nb = time_call(lambda: _ybar_numba(*kernel_args), args.repeats)
        same = np.array_equal(out_np[0], out_nb[0], equal_nan=True) and np.array_equal(
            out_np[1], out_nb[1]
        )
        print(f"  numba  {t_nb * 1e3:8.1f} ms   speedup x{t_np / t_nb:.2f}   bit-identical: {same}")
    else:
        print("  numba  unavailable")

    print(f"\npath moments end to end, num={args.num} (best of {args.repeats}):")
    results = {}
    for backend in ("numpy", "numba") if HAVE_NUMBA else ("numpy",):
        set_backend(backend)
        estimate_path_moments(mu, model, 20_000, seed=1)  # warm-up
        t, pm = time_call(
            lambda: estimate_path_moments(mu, model, args.num, seed=1), args.repeats
        )
        results[backend] = (t, pm)
        print(f"  {backend:<6} {t:8.2f} s   mu={pm.mu:.6f} sigma2={pm.sigma2:.6f}")
    if len(results) == 2:
        t_np, pm_np = results["numpy"]
        t_nb, pm_nb = results["numba"]
        print(f"  speedup x{t_np / t_nb:.2f}   results identical: "
              f"{pm_np.mu == pm_nb.mu and pm_np.sigma2 == pm_nb.sigma2}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
