"""Numba kernels for the finite-difference right-hand side.

Same stencils and clamping rule as _fd_numpy, written as per-dimension
scalar loops; agreement between the two backends is asserted in tests.
"""

from __future__ import annotations

import numba as nb
import numpy as np

njit_kwargs = {"cache": True, "nogil": True}


@nb.njit(**njit_kwargs)
def _d1_line(v, h, out):
    m = v.size
    c = 0.5 / h
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * c
    for i in range(1, m - 1):
        out[i] = (v[i + 1] - v[i - 1]) * c
    out[m - 1] = (3.0 * v[m - 1] - 4.0 * v[m - 2] + v[m - 3]) * c


@nb.njit(**njit_kwargs)
def _d2_line(v, h, out):
    m = v.size
    c = 1.0 / (h * h)
    out[0] = (v[0] - 2.0 * v[1] + v[2]) * c
    for i in range(1, m - 1):
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * c
    out[m - 1] = (v[m - 1] - 2.0 * v[m - 2] + v[m - 3]) * c


@nb.njit(**njit_kwargs)
def rhs_1d(u, h, r, lam, a0, b0, rho):
    m = u.size
    ux = np.empty_like(u)
    uxx = np.empty_like(u)
    _d1_line(u, h, ux)
    _d2_line(u, h, uxx)
    f = np.empty_like(u)
    tally = 0
    for i in range(m):
        eps = 1e-12 * max(abs(u[i]), 1.0)
        c = uxx[i]
        if c <= eps:
            c = eps
            tally += 1
        num = lam * ux[i]
        f[i] = r * (i * h) * ux[i] - num * num / (2.0 * c)
    return f, tally


@nb.njit(**njit_kwargs)
def rhs_2d(u, h, r, lam, a0, b0, rho):
    m0, m1 = u.shape
    ux = np.empty_like(u)
    uxx = np.empty_like(u)
    uy = np.empty_like(u)
    uyy = np.empty_like(u)
    uxy = np.empty_like(u)
    for j in range(m1):
        _d1_line(u[:, j], h, ux[:, j])
        _d2_line(u[:, j], h, uxx[:, j])
    for i in range(m0):
        _d1_line(u[i, :], h, uy[i, :])
        _d2_line(u[i, :], h, uyy[i, :])
    for j in range(m1):
        _d1_line(uy[:, j], h, uxy[:, j])
    f = np.empty_like(u)
    tally = 0
    for i in range(m0):
        x = i * h
        for j in range(m1):
            y = j * h
            eps = 1e-12 * max(abs(u[i, j]), 1.0)
            c = uxx[i, j]
            if c <= eps:
                c = eps
                tally += 1
            num = rho * a0 * (y * uxy[i, j]) + lam * ux[i, j]
            f[i, j] = (0.5 * a0 * a0 * (y * y * uyy[i, j]) + r * x * ux[i, j]
                       + b0 * (y * uy[i, j]) - num * num / (2.0 * c))
    return f, tally


@nb.njit(**njit_kwargs)
def rhs_3d(u, h, r, lam, a0, b0, rho):
    m0, m1, m2 = u.shape
    ux = np.empty_like(u)
    uxx = np.empty_like(u)
    uy1 = np.empty_like(u)
    uyy1 = np.empty_like(u)
    uxy1 = np.empty_like(u)
    uy2 = np.empty_like(u)
    uyy2 = np.empty_like(u)
    uxy2 = np.empty_like(u)
    for j in range(m1):
        for k in range(m2):
            _d1_line(u[:, j, k], h, ux[:, j, k])
            _d2_line(u[:, j, k], h, uxx[:, j, k])
    for i in range(m0):
        for k in range(m2):
            _d1_line(u[i, :, k], h, uy1[i, :, k])
            _d2_line(u[i, :, k], h, uyy1[i, :, k])
        for j in range(m1):
            _d1_line(u[i, j, :], h, uy2[i, j, :])
            _d2_line(u[i, j, :], h, uyy2[i, j, :])
    for j in range(m1):
        for k in range(m2):
            _d1_line(uy1[:, j, k], h, uxy1[:, j, k])
            _d1_line(uy2[:, j, k], h, uxy2[:, j, k])
    f = np.empty_like(u)
    tally = 0
    for i in range(m0):
        x = i * h
        for j in range(m1):
            y1 = j * h
            for k in range(m2):
                y2 = k * h
                eps = 1e-12 * max(abs(u[i, j, k]), 1.0)
                c = uxx[i, j, k]
                if c <= eps:
                    c = eps
                    tally += 1
                diff = y1 * y1 * uyy1[i, j, k] + y2 * y2 * uyy2[i, j, k]
                drift = y1 * uy1[i, j, k] + y2 * uy2[i, j, k]
                cross = y1 * uxy1[i, j, k] + y2 * uxy2[i, j, k]
                num = rho * a0 * cross + lam * ux[i, j, k]
                f[i, j, k] = (0.5 * a0 * a0 * diff + r * x * ux[i, j, k]
                              + b0 * drift - num * num / (2.0 * c))
    return f, tally
