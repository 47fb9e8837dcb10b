"""Timings: compiled kernels vs the pure NumPy fallback.

Run:  python benchmarks/bench_kernels.py [--repeat N]

Covers the two hot loops (Bellman maximization sweep, Euler bisection
sweep) at a few sizes, plus one end-to-end savings solve.
"""

import argparse
import time

import numpy as np

from perovdp._kernels import _core, _pure
from perovdp.savings import (
    SavingsModel,
    ShockDistribution,
    UtilitySpec,
    geometric_grid,
    solve_savings,
)


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bellman_case(rng, I, nx, ny):
    B = rng.uniform(0.0, 0.8 / I, (I, I))
    utility = rng.normal(size=(I, nx, ny))
    feasible = rng.random((I, nx, ny)) < 0.7
    feasible[:, :, 0] = True
    motion = rng.integers(0, nx, (I, I, nx, ny)).astype(np.intp)
    V = rng.normal(size=(I, nx))
    return (B, utility, feasible, motion, V)


def euler_case(rng, I, M, K):
    P = np.full((I, I), 1.0 / I)
    w = np.full(K, 1.0 / K)
    bt = rng.uniform(0.9, 0.96, (I, I, K))
    Rt = rng.uniform(0.9, 1.05, (I, I, K))
    Yt = rng.uniform(0.5, 1.0, (I, I, K))
    grid = geometric_grid(0.4, 25.0, M)
    share = rng.uniform(0.4, 0.9, (I, 1))
    F = (share * grid[None, :]) ** -2.0
    return (2.0, P, w, bt, Rt, Yt, grid, F, 62, 1e-12)


def solve_case(points):
    R_row = [[0.85, 1.25], [0.64, 1.04]]
    Y_row = [[0.6, 0.9], [0.5, 0.8]]
    return SavingsModel.create(
        [[0.5, 0.5], [0.5, 0.5]],
        ShockDistribution([-1.0, 1.0], [0.5, 0.5]),
        np.full((2, 2, 2), 0.93),
        np.array([R_row, R_row]),
        np.array([Y_row, Y_row]),
        UtilitySpec.crra(2.0),
        geometric_grid(0.4, 25.0, points),
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        raise SystemExit("compiled kernels are not built; nothing to compare")

    rng = np.random.default_rng(0)
    rows = []

    for I, nx, ny in ((2, 200, 100), (4, 400, 200)):
        case = bellman_case(rng, I, nx, ny)
        t_pure = timeit(lambda: _pure.bellman_sweep(*case), args.repeat)
        t_core = timeit(lambda: _core.bellman_sweep(*case), args.repeat)
        rows.append((f"bellman_sweep I={I} nx={nx} ny={ny}", t_pure, t_core))

    for I, M, K in ((2, 120, 2), (3, 400, 5)):
        case = euler_case(rng, I, M, K)
        t_pure = timeit(lambda: _pure.euler_sweep_crra(*case), args.repeat)
        t_core = timeit(lambda: _core.euler_sweep_crra(*case), args.repeat)
        rows.append((f"euler_sweep I={I} M={M} K={K}", t_pure, t_core))

    import os

    model = solve_case(200)
    def solve_with(backend):
        os.environ["PEROV_BACKEND"] = backend
        import importlib

        import perovdp._kernels as kernels
        importlib.reload(kernels)
        import perovdp.savings as sv
        importlib.reload(sv)
        model_b = solve_case(200)
        return lambda: sv.solve_savings(model_b, tol=1e-9)

    rows.append((
        "solve_savings M=200 to 1e-9",
        timeit(solve_with("pure"), max(1, args.repeat // 2)),
        timeit(solve_with("compiled"), max(1, args.repeat // 2)),
    ))
    os.environ.pop("PEROV_BACKEND", None)

    width = max(len(r[0]) for r in rows)
    print(f"{'case'.ljust(width)}  {'pure':>10}  {'compiled':>10}  {'speedup':>8}")
    for name, t_pure, t_core in rows:
        print(f"{name.ljust(width)}  {t_pure * 1e3:>8.2f}ms  {t_core * 1e3:>8.2f}ms"
              f"  {t_pure / t_core:>7.1f}x")


if __name__ == "__main__":
    main()
