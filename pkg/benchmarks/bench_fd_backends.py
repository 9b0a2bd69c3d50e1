#!/usr/bin/env python3
"""Benchmark the finite-difference kernels: numba backend vs pure numpy.

Times the spatial right-hand side on its own and a full reversed-time solve,
for each dimension, and prints median timings with speedups.  The numpy
fallback is what runs when NGHJB_DISABLE_NUMBA=1 or numba is missing; both
paths must agree bitwise, which is asserted here before timing.
"""

import argparse
import time

import numpy as np

from nghjb import _accel, _fd_numpy, fd
from nghjb.model import MarketParams

if not _accel.HAVE_NUMBA:
    raise SystemExit("numba is not importable; nothing to compare against")
from nghjb import _fd_numba  # noqa: E402


def median_time(func, repeats, warmup=2):
    for _ in range(warmup):
        func()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def rhs_case(d, N, mp):
    grid = fd.Grid(d=d, N=N)
    u = fd.init_field(grid, mp).values
    kern = (_fd_numba.rhs_1d, _fd_numba.rhs_2d, _fd_numba.rhs_3d)[d - 1]
    args = (u, grid.h, mp.r, mp.lam, mp.a0, mp.b0, mp.rho)

    f_nb, tally_nb = kern(*args)
    f_np, tally_np = _fd_numpy.rhs(*args)
    assert tally_nb == tally_np
    assert np.array_equal(f_nb, f_np), "backends disagree"

    return (
        median_time(lambda: kern(*args), repeats=20),
        median_time(lambda: _fd_numpy.rhs(*args), repeats=20),
    )


def solve_case(d, N, mp, repeats):
    grid = fd.Grid(d=d, N=N)

    def run():
        fd.solve(grid, mp, mp.T)

    saved = _accel.USE_NUMBA
    try:
        _accel.USE_NUMBA = True
        t_nb = median_time(run, repeats)
        _accel.USE_NUMBA = False
        t_np = median_time(run, repeats)
    finally:
        _accel.USE_NUMBA = saved
    return t_nb, t_np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cases = [(1, 10), (2, 7), (3, 5)]

    print("rhs kernel (single evaluation)")
    print(f"{'case':>12} {'numba':>12} {'numpy':>12} {'speedup':>8}")
    for d, N in cases:
        mp = MarketParams(n=d - 1, k=1.0 if d > 1 else 0.0)
        t_nb, t_np = rhs_case(d, N, mp)
        print(f"  d={d} N={N:>2}  {t_nb * 1e3:10.3f}ms {t_np * 1e3:10.3f}ms {t_np / t_nb:7.1f}x")

    print()
    print(f"full solve to T=1 ({args.repeats} repeats)")
    print(f"{'case':>12} {'numba':>12} {'numpy':>12} {'speedup':>8}")
    for d, N in [(1, 8), (2, 6), (3, 4)]:
        mp = MarketParams(n=d - 1, k=1.0 if d > 1 else 0.0)
        t_nb, t_np = solve_case(d, N, mp, args.repeats)
        print(f"  d={d} N={N:>2}  {t_nb * 1e3:10.3f}ms {t_np * 1e3:10.3f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
