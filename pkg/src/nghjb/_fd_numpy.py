"""Pure-numpy finite-difference backend (vectorized slicing).

Stencils on a uniform grid with spacing h:
  first derivative: central 2nd order inside, one-sided 2nd order at ends;
  second derivative: central inside, quadratic-extrapolation ghost at ends
  (equivalent to the shifted 3-point difference);
  mixed d2/dx dy_j: first-derivative operator along y_j, then along x.
"""

from __future__ import annotations

import numpy as np


def _get(u: np.ndarray, axis: int, idx) -> np.ndarray:
    sl = [slice(None)] * u.ndim
    sl[axis] = idx
    return u[tuple(sl)]


def _put(out: np.ndarray, axis: int, idx, value) -> None:
    sl = [slice(None)] * out.ndim
    sl[axis] = idx
    out[tuple(sl)] = value


def d1(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    """First derivative along ``axis``."""
    out = np.empty_like(u)
    c = 0.5 / h
    _put(out, axis, slice(1, -1),
         (_get(u, axis, slice(2, None)) - _get(u, axis, slice(0, -2))) * c)
    _put(out, axis, 0,
         (-3.0 * _get(u, axis, 0) + 4.0 * _get(u, axis, 1) - _get(u, axis, 2)) * c)
    _put(out, axis, -1,
         (3.0 * _get(u, axis, -1) - 4.0 * _get(u, axis, -2) + _get(u, axis, -3)) * c)
    return out


def d2(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second derivative along ``axis``."""
    out = np.empty_like(u)
    c = 1.0 / (h * h)
    _put(out, axis, slice(1, -1),
         (_get(u, axis, slice(2, None)) - 2.0 * _get(u, axis, slice(1, -1))
          + _get(u, axis, slice(0, -2))) * c)
    _put(out, axis, 0,
         (_get(u, axis, 0) - 2.0 * _get(u, axis, 1) + _get(u, axis, 2)) * c)
    _put(out, axis, -1,
         (_get(u, axis, -1) - 2.0 * _get(u, axis, -2) + _get(u, axis, -3)) * c)
    return out


def _coord(m: int, d: int, axis: int, h: float) -> np.ndarray:
    shape = [1] * d
    shape[axis] = m
    return (np.arange(m) * h).reshape(shape)


def rhs(u: np.ndarray, h: float, r: float, lam: float, a0: float, b0: float,
        rho: float) -> tuple[np.ndarray, int]:
    """HJB right-hand side from finite-difference jets, with curvature guard.

    Nodes where u_xx <= 1e-12*max(|u|, 1) are evaluated with u_xx clamped to
    that threshold; the returned tally counts them.
    """
    d = u.ndim
    m = u.shape[0]
    ux = d1(u, 0, h)
    uxx = d2(u, 0, h)
    eps = 1e-12 * np.maximum(np.abs(u), 1.0)
    tally = int(np.count_nonzero(uxx <= eps))
    uxx_c = np.maximum(uxx, eps)
    diff = 0.0
    drift = 0.0
    cross = 0.0
    for axis in range(1, d):
        y = _coord(m, d, axis, h)
        uy = d1(u, axis, h)
        diff = diff + y * y * d2(u, axis, h)
        drift = drift + y * uy
        cross = cross + y * d1(uy, 0, h)
    x = _coord(m, d, 0, h)
    num = rho * a0 * cross + lam * ux
    f = 0.5 * a0 * a0 * diff + r * x * ux + b0 * drift - num * num / (2.0 * uxx_c)
    return f, tally
