"""Projection of the HJB flow onto the trial family's tangent space.

The flow solves M(theta) dtheta/dt = V(theta) with
M_ij = <du/dtheta_i, du/dtheta_j> and V_i = <du/dtheta_i, F(u_theta)>.
Two assembly routes are provided: closed forms (scaled rate constants) and
tensor Gauss-Laguerre quadrature of the defining integrals.  They are kept
strictly separate so one can adjudicate the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite
from .model import MarketParams
from .quadrature import assemble_mv_quadrature
from .trial import TrialState, rate_constants

__all__ = [
    "GalerkinSystem",
    "Trajectory",
    "assemble_closed",
    "assemble_quadrature",
    "solve_step_direction",
    "integrate",
    "mass_matrix_discrepancy",
]


@dataclass(frozen=True)
class GalerkinSystem:
    """Mass matrix and load vector at one trial state."""

    m: np.ndarray
    v: np.ndarray

    @property
    def size(self) -> int:
        return len(self.v)


def assemble_closed(
    mp: MarketParams, s: TrialState, paper_m33: bool = False
) -> GalerkinSystem:
    """Closed-form system.  M is diagonal; only alpha enters, as a scale.

    The direct evaluation of <du/dtheta_2, du/dtheta_2> gives n*alpha^2/4.
    ``paper_m33`` switches that entry to alpha^2/4, the printed variant,
    which rescales the zeta rate by n (see rate_constants modes).
    """
    a2 = math.exp(2.0 * s.log_alpha)
    rc = rate_constants(mp, "oracle")
    if mp.n == 0:
        m = a2 * np.diag([1.0, 0.25])
        v = a2 * np.array([rc.c_alpha, 0.25 * rc.c_beta])
        return GalerkinSystem(m, v)
    n = mp.n
    m33 = 0.25 if paper_m33 else 0.25 * n
    m = a2 * np.diag([1.0, 0.25, m33])
    v = a2 * np.array([rc.c_alpha, 0.25 * rc.c_beta, 0.25 * n * rc.c_zeta])
    return GalerkinSystem(m, v)


def assemble_quadrature(mp: MarketParams, s: TrialState, order: int = 8) -> GalerkinSystem:
    """Quadrature route; see :func:`nghjb.quadrature.assemble_mv_quadrature`."""
    return GalerkinSystem(*assemble_mv_quadrature(mp, s, order))


def solve_step_direction(system: GalerkinSystem, eps_reg: float = 0.0) -> np.ndarray:
    """Direction dtheta/dt = (M + eps_reg I)^-1 V via Cholesky.

    The system never exceeds 3x3 (the family has at most three parameters)
    and sits inside the integration loop, where LAPACK wrapper overhead
    would dominate, so the factorization is written out.
    """
    k = system.size
    a = system.m.tolist()
    if eps_reg:
        for i in range(k):
            a[i][i] += eps_reg
    low = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1):
            acc = a[i][j]
            for t in range(j):
                acc -= low[i][t] * low[j][t]
            if i == j:
                if acc <= 0.0:
                    raise NotPositiveDefinite(
                        f"pivot {i} of the mass matrix is {acc:.3e}"
                    )
                low[i][i] = math.sqrt(acc)
            else:
                low[i][j] = acc / low[j][j]
    out = system.v.tolist()
    for i in range(k):
        for t in range(i):
            out[i] -= low[i][t] * out[t]
        out[i] /= low[i][i]
    for i in reversed(range(k)):
        for t in range(i + 1, k):
            out[i] -= low[t][i] * out[t]
        out[i] /= low[i][i]
    return np.array(out)


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of the parameter ODE, times[0] = 0."""

    times: np.ndarray
    states: list[TrialState]

    @property
    def final(self) -> TrialState:
        return self.states[-1]


def integrate(
    mp: MarketParams,
    s0: TrialState,
    T: float,
    dt: float,
    assembler: str = "closed",
    method: str = "rk4",
    eps_reg: float = 0.0,
    order: int = 8,
    paper_m33: bool = False,
) -> Trajectory:
    """Integrate M dtheta/dt = V from s0 over [0, T] with fixed step dt.

    ``assembler`` is "closed", "quadrature", or a callable
    (mp, state) -> GalerkinSystem.  ``method`` is "rk4" or "euler".  A final
    partial step lands exactly on T.
    """
    if T < 0.0:
        raise ValueError("T must be non-negative")
    if T > 0.0 and dt <= 0.0:
        raise ValueError("dt must be positive")
    if assembler == "closed":
        def assemble(s: TrialState) -> GalerkinSystem:
            return assemble_closed(mp, s, paper_m33)
    elif assembler == "quadrature":
        def assemble(s: TrialState) -> GalerkinSystem:
            return assemble_quadrature(mp, s, order)
    elif callable(assembler):
        def assemble(s: TrialState) -> GalerkinSystem:
            return assembler(mp, s)
    else:
        raise ValueError(f"unknown assembler {assembler!r}")
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")

    def f(theta: np.ndarray) -> np.ndarray:
        return solve_step_direction(assemble(TrialState.from_array(theta)), eps_reg)

    theta = s0.as_array()
    times = [0.0]
    states = [s0]
    t = 0.0
    while t < T - 1e-12 * max(T, 1.0):
        h = min(dt, T - t)
        if method == "euler":
            theta = theta + h * f(theta)
        else:
            k1 = f(theta)
            k2 = f(theta + 0.5 * h * k1)
            k3 = f(theta + 0.5 * h * k2)
            k4 = f(theta + h * k3)
            theta = theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = min(t + h, T)
        times.append(t)
        states.append(TrialState.from_array(theta))
    return Trajectory(np.array(times), states)


def mass_matrix_discrepancy(mp: MarketParams, s: TrialState, order: int = 8) -> dict | None:
    """Quadrature vs printed value of the zeta-zeta mass entry.

    The printed closed form lists alpha^2/4 for every n; direct evaluation
    of the defining integral gives n*alpha^2/4.  Returns a record when the
    two differ (n >= 2), else None.
    """
    if mp.n < 2:
        return None
    m, _ = assemble_mv_quadrature(mp, s, order)
    a2 = math.exp(2.0 * s.log_alpha)
    return {
        "entry": "M[2,2]",
        "n": mp.n,
        "quadrature": float(m[2, 2]),
        "printed": 0.25 * a2,
        "ratio": float(m[2, 2] / (0.25 * a2)),
    }
