"""Explicit finite-difference solver on the truncated box [0, L]^d.

Forward Euler in (reversed) time on du/dt = F(u) with F from the HJB model;
spatial jets by the stencils documented in the backend modules.  The grid
has 2^N + 1 points per axis so successive refinements nest, which keeps
self-convergence probes and cross-resolution error reports exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel, _fd_numpy
from .errors import CflViolation, DomainMismatch
from .model import MarketParams, SpacePoint, terminal_payoff

# imported whenever numba exists so USE_NUMBA can be flipped at runtime;
# decoration is lazy, no compilation happens until a kernel is called
if _accel.HAVE_NUMBA:
    from . import _fd_numba

__all__ = [
    "Grid",
    "Field",
    "ErrorReport",
    "init_field",
    "cfl_bound",
    "step",
    "solve",
    "error_report",
]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [0, L]^d with 2^N + 1 points per axis."""

    d: int
    N: int
    L: float = 4.0

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if not 1 <= self.N <= 12:
            raise ValueError("N must lie in [1, 12]")
        if self.L <= 0.0:
            raise ValueError("L must be positive")

    @property
    def m(self) -> int:
        return 2 ** self.N + 1

    @property
    def h(self) -> float:
        return self.L / 2 ** self.N

    def axis(self) -> np.ndarray:
        return np.arange(self.m) * self.h

    def mesh_point(self) -> SpacePoint:
        """All nodes as one broadcastable SpacePoint batch."""
        coords = np.meshgrid(*([self.axis()] * self.d), indexing="ij")
        y = np.stack(coords[1:]) if self.d > 1 else np.zeros((0,) + coords[0].shape)
        return SpacePoint(coords[0], y)


@dataclass
class Field:
    """Grid function at reversed time t, plus solver diagnostics."""

    values: np.ndarray
    t: float
    grid: Grid
    clamp_tally: int = 0
    dt: float | None = None
    steps: int = 0


def init_field(grid: Grid, mp: MarketParams) -> Field:
    """Terminal payoff sampled on the grid (reversed-time initial datum)."""
    if mp.n != grid.d - 1:
        raise DomainMismatch(f"grid.d = {grid.d} requires n = {grid.d - 1}, got {mp.n}")
    return Field(terminal_payoff(mp, grid.mesh_point()), 0.0, grid)


def _rhs(values: np.ndarray, h: float, mp: MarketParams) -> tuple[np.ndarray, int]:
    if _accel.USE_NUMBA:
        kern = (_fd_numba.rhs_1d, _fd_numba.rhs_2d, _fd_numba.rhs_3d)[values.ndim - 1]
        return kern(values, h, mp.r, mp.lam, mp.a0, mp.b0, mp.rho)
    return _fd_numpy.rhs(values, h, mp.r, mp.lam, mp.a0, mp.b0, mp.rho)


def cfl_bound(f: Field, mp: MarketParams) -> float:
    """Explicit-step stability bound h^2 / (2 d D_max).

    D_max is the largest diffusion-like coefficient over nodes: 1/2 a0^2 y^2
    on each factor axis and the effective wealth diffusion 1/2 e^2 from the
    controlled term, with exposure e estimated from the field's own jets.
    """
    u = f.values
    h = f.grid.h
    ux = _fd_numpy.d1(u, 0, h)
    uxx = _fd_numpy.d2(u, 0, h)
    eps = 1e-12 * np.maximum(np.abs(u), 1.0)
    uxx_c = np.maximum(uxx, eps)
    cross = 0.0
    d_max = 0.0
    for axis in range(1, u.ndim):
        y = _fd_numpy._coord(f.grid.m, u.ndim, axis, h)
        cross = cross + y * _fd_numpy.d1(_fd_numpy.d1(u, axis, h), 0, h)
        d_max = max(d_max, 0.5 * mp.a0 ** 2 * f.grid.L ** 2)
    exposure = (mp.rho * mp.a0 * cross + mp.lam * ux) / uxx_c
    d_max = max(d_max, 0.5 * float(np.max(exposure * exposure)))
    if d_max == 0.0:
        return math.inf
    return h * h / (2.0 * u.ndim * d_max)


def step(f: Field, mp: MarketParams, dt: float, check_cfl: bool = True) -> Field:
    """One forward Euler step.  Clamped-curvature nodes add to the tally."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if check_cfl and dt > cfl_bound(f, mp):
        raise CflViolation(f"dt = {dt} exceeds stability bound {cfl_bound(f, mp)}")
    rhs, tally = _rhs(f.values, f.grid.h, mp)
    return replace(
        f,
        values=f.values + dt * rhs,
        t=f.t + dt,
        clamp_tally=f.clamp_tally + tally,
        steps=f.steps + 1,
    )


def default_dt(grid: Grid, mp: MarketParams, T: float) -> float:
    """Default step: 0.9 x the tighter of stability and the accuracy cap.

    The accuracy cap T*h/L keeps the temporal error shrinking under mesh
    refinement even when the stability bound alone would allow dt > T
    (tame low-dimensional runs), so refinement studies stay monotone.
    """
    f0 = init_field(grid, mp)
    return 0.9 * min(cfl_bound(f0, mp), T * grid.h / grid.L)


def solve(grid: Grid, mp: MarketParams, T: float, dt: float | None = None) -> Field:
    """March the payoff to reversed time T; final partial step lands on T.

    The stability bound is computed once, from the initial field.
    """
    if T < 0.0:
        raise ValueError("T must be non-negative")
    f = init_field(grid, mp)
    if T == 0.0:
        return f
    bound = cfl_bound(f, mp)
    if dt is None:
        dt = 0.9 * min(bound, T * grid.h / grid.L)
    elif dt > bound:
        raise CflViolation(f"dt = {dt} exceeds stability bound {bound}")
    f.dt = dt
    tiny = 1e-12 * max(T, 1.0)
    while f.t < T - tiny:
        f = step(f, mp, min(dt, T - f.t), check_cfl=False)
    f.t = T
    if f.clamp_tally:
        warnings.warn(
            f"curvature clamp engaged at {f.clamp_tally} node evaluations",
            RuntimeWarning,
            stacklevel=2,
        )
    return f


@dataclass(frozen=True)
class ErrorReport:
    """One error metric plus the context it was computed in."""

    metric: str
    value: float
    context: dict = field(default_factory=dict)


def _on_grid(obj, grid: Grid) -> np.ndarray:
    """Evaluate a Field / callable / array on ``grid``'s nodes."""
    if isinstance(obj, Field):
        g = obj.grid
        if g.d != grid.d or g.L != grid.L:
            raise DomainMismatch("fields live on different boxes")
        if g.N < grid.N:
            raise DomainMismatch(f"field at N = {g.N} cannot be refined to N = {grid.N}")
        stride = 2 ** (g.N - grid.N)
        return obj.values[(slice(None, None, stride),) * grid.d]
    if callable(obj):
        return np.asarray(obj(grid.mesh_point()), dtype=float)
    arr = np.asarray(obj, dtype=float)
    if arr.shape != (grid.m,) * grid.d:
        raise DomainMismatch(f"array shape {arr.shape} does not match grid")
    return arr


def _node_index(coord: float, grid: Grid, what: str) -> int:
    idx = round(coord / grid.h)
    if not 0 <= idx < grid.m or abs(coord - idx * grid.h) > 1e-9 * max(grid.h, 1.0):
        raise ValueError(f"{what} = {coord} is not a node of the evaluation grid")
    return int(idx)


def error_report(
    a,
    b,
    grid: Grid | None = None,
    metric: str = "mean_abs",
    point: tuple | None = None,
    x: float | None = None,
) -> ErrorReport:
    """Compare two solutions on shared nodes.

    ``a`` and ``b`` may each be a Field, an array on the evaluation grid, or
    a callable taking a SpacePoint batch (an analytic solution).  ``grid``
    defaults to the coarsest Field grid among the arguments.  ``metric`` is
    one of mean_abs, mean_abs_log10, mean_rel_pct (b is the reference),
    pointwise_abs (needs ``point``), slice_mean (mean over the fixed-x
    slice, needs ``x``).
    """
    if grid is None:
        grids = [o.grid for o in (a, b) if isinstance(o, Field)]
        if not grids:
            raise ValueError("grid is required when neither argument is a Field")
        grid = min(grids, key=lambda g: g.N)
    av = _on_grid(a, grid)
    bv = _on_grid(b, grid)
    diff = np.abs(av - bv)
    ctx = {"d": grid.d, "N": grid.N, "L": grid.L}
    if metric == "mean_abs":
        value = float(np.mean(diff))
    elif metric == "mean_abs_log10":
        # exact agreement gives -inf, the honest log of a zero error
        with np.errstate(divide="ignore"):
            value = float(np.log10(np.mean(diff)))
    elif metric == "mean_rel_pct":
        value = float(100.0 * np.mean(diff / np.abs(bv)))
    elif metric == "pointwise_abs":
        if point is None:
            raise ValueError("pointwise_abs requires point")
        idx = tuple(_node_index(c, grid, "point coordinate") for c in point)
        if len(idx) != grid.d:
            raise ValueError(f"point must have {grid.d} coordinates")
        value = float(diff[idx])
        ctx["point"] = tuple(point)
    elif metric == "slice_mean":
        if x is None:
            raise ValueError("slice_mean requires x")
        value = float(np.mean(diff[_node_index(x, grid, "x")]))
        ctx["x"] = x
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return ErrorReport(metric, value, ctx)
