"""Exponential trial family and its closed-form parameter flow.

Normalized ansatz u_theta = exp(theta0) * psi_theta with

    psi_theta(x, y) = sqrt(beta * zeta^n) * exp(-(beta*x + zeta*sum(y))/2),

so ||psi_theta||_2 = 1 on [0, inf)^(1+n).  Parameters are stored as logs,
theta = (log alpha, log beta, log zeta); the third entry is absent when
n = 0.  Projecting the HJB flow on this family yields constant log-rates,
hence straight-line trajectories in theta.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBranch
from .model import MarketParams, SpacePoint, UJet

__all__ = [
    "TrialState",
    "RateConstants",
    "initial_params",
    "rate_constants",
    "evolve",
    "trial_value",
    "trial_jet",
    "trial_jet_normalized",
    "value_function",
]


@dataclass(frozen=True)
class TrialState:
    """Log-parameters of one member of the trial family."""

    log_alpha: float
    log_beta: float
    log_zeta: float | None = None

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def beta(self) -> float:
        return math.exp(self.log_beta)

    @property
    def zeta(self) -> float:
        if self.log_zeta is None:
            raise InvalidBranch("state has no zeta parameter (n = 0 branch)")
        return math.exp(self.log_zeta)

    @property
    def size(self) -> int:
        return 2 if self.log_zeta is None else 3

    def as_array(self) -> np.ndarray:
        if self.log_zeta is None:
            return np.array([self.log_alpha, self.log_beta])
        return np.array([self.log_alpha, self.log_beta, self.log_zeta])

    @staticmethod
    def from_array(theta: np.ndarray) -> "TrialState":
        if len(theta) == 2:
            return TrialState(float(theta[0]), float(theta[1]))
        return TrialState(float(theta[0]), float(theta[1]), float(theta[2]))


@dataclass(frozen=True)
class RateConstants:
    """Constant time derivatives of the log-parameters."""

    c_alpha: float
    c_beta: float
    c_zeta: float | None = None


def initial_params(mp: MarketParams) -> TrialState:
    """Trial state reproducing the terminal payoff exactly.

    Matching exp(-gamma*(x + k*sum(y)))/gamma forces beta = 2*gamma,
    zeta = 2*gamma*k and alpha*sqrt(beta*zeta^n) = 1/gamma.  With k = 0 the
    two-parameter branch (no zeta) applies.
    """
    beta = 2.0 * mp.gamma
    if mp.k == 0.0:
        alpha = 1.0 / (mp.gamma * math.sqrt(beta))
        return TrialState(math.log(alpha), math.log(beta))
    if mp.n < 1:
        raise InvalidBranch("k > 0 requires at least one factor (n >= 1)")
    zeta = 2.0 * mp.gamma * mp.k
    alpha = 1.0 / (mp.gamma * math.sqrt(beta * zeta ** mp.n))
    return TrialState(math.log(alpha), math.log(beta), math.log(zeta))


def rate_constants(mp: MarketParams, mode: str = "oracle") -> RateConstants:
    """Log-parameter rates of the projected flow.

    ``mode`` selects the zeta rate convention: "oracle" divides the load
    vector entry by the directly computed mass entry n*alpha^2/4, "paper"
    by alpha^2/4.  The two agree for n <= 1; c_alpha and c_beta agree always.
    """
    if mode not in ("oracle", "paper"):
        raise ValueError(f"unknown mode {mode!r}")
    n, a0, b0, rho, lam, r = mp.n, mp.a0, mp.b0, mp.rho, mp.lam, mp.r
    c_alpha = 0.25 * (
        a0 * (n * a0 + 2.0 * n * lam * rho - 0.5 * n * (n + 1) * a0 * rho ** 2)
        - 2.0 * (n * b0 + r + lam ** 2)
    )
    if n == 0:
        return RateConstants(c_alpha, r)
    c_zeta = b0 - a0 * rho * lam + a0 ** 2 * (0.5 * (n + 1) * rho ** 2 - 1.0)
    if mode == "paper":
        c_zeta = n * c_zeta
    return RateConstants(c_alpha, r, c_zeta)


def evolve(s: TrialState, rc: RateConstants, t: float) -> TrialState:
    """Advance the state by time t along the constant-rate flow."""
    if (s.log_zeta is None) != (rc.c_zeta is None):
        raise InvalidBranch("state and rate constants belong to different branches")
    if s.log_zeta is None:
        return TrialState(s.log_alpha + rc.c_alpha * t, s.log_beta + rc.c_beta * t)
    return TrialState(
        s.log_alpha + rc.c_alpha * t,
        s.log_beta + rc.c_beta * t,
        s.log_zeta + rc.c_zeta * t,
    )


def _expo(s: TrialState, n: int, p: SpacePoint):
    beta = s.beta
    zsum = s.zeta * p.ysum if n else 0.0
    logn = s.log_beta + n * s.log_zeta if n else s.log_beta
    return np.exp(s.log_alpha + 0.5 * logn - 0.5 * (beta * p.x + zsum))


def trial_value(s: TrialState, n: int, p: SpacePoint):
    """u_theta evaluated at p (scalar point or batch)."""
    if n and s.log_zeta is None:
        raise InvalidBranch("n >= 1 requires a zeta parameter")
    return _expo(s, n, p)


def trial_jet(s: TrialState, n: int, p: SpacePoint) -> UJet:
    """Closed-form second-order jet of u_theta at p.

    Every derivative is a multiple of u: u_x = -(beta/2) u,
    u_xx = (beta^2/4) u, du/dy_i = -(zeta/2) u, d2u/dx dy_i = (beta zeta/4) u
    and d2u/dy_i dy_j = (zeta^2/4) u for all i, j.
    """
    u = trial_value(s, n, p)
    beta = s.beta
    u_x = -0.5 * beta * u
    u_xx = 0.25 * beta * beta * u
    if n == 0:
        shape = np.shape(u)
        return UJet(u, u_x, u_xx, np.zeros((0,) + shape), np.zeros((0,) + shape),
                    np.zeros((0, 0) + shape))
    zeta = s.zeta
    grad = np.broadcast_to(-0.5 * zeta * u, (n,) + np.shape(u))
    mixed = np.broadcast_to(0.25 * beta * zeta * u, (n,) + np.shape(u))
    hess = np.broadcast_to(0.25 * zeta * zeta * u, (n, n) + np.shape(u))
    return UJet(u, u_x, u_xx, grad, mixed, hess)


def trial_jet_normalized(s: TrialState, n: int) -> UJet:
    """Jet of u_theta divided by its own value (point-independent).

    F is positively homogeneous in the jet, so F(u)/u = F(jet/u); this form
    stays well-scaled where u itself underflows (far quadrature nodes).
    """
    beta = s.beta
    if n == 0:
        return UJet(1.0, -0.5 * beta, 0.25 * beta * beta)
    zeta = s.zeta
    return UJet(
        1.0,
        -0.5 * beta,
        0.25 * beta * beta,
        np.full(n, -0.5 * zeta),
        np.full(n, 0.25 * beta * zeta),
        np.full((n, n), 0.25 * zeta * zeta),
    )


def value_function(mp: MarketParams, t: float, p: SpacePoint, mode: str = "oracle"):
    """Trial value function V(t, p) = -u_{theta(T-t)}(p).

    With k = 0 the claim vanishes and the y-independent two-parameter branch
    applies regardless of n.
    """
    if t < 0.0 or t > mp.T:
        raise ValueError("t must lie in [0, T]")
    tau = mp.T - t
    if mp.k == 0.0:
        mp0 = dataclasses.replace(mp, n=0, k=0.0)
        s = evolve(initial_params(mp0), rate_constants(mp0, mode), tau)
        return -trial_value(s, 0, SpacePoint(p.x))
    s = evolve(initial_params(mp), rate_constants(mp, mode), tau)
    return -trial_value(s, mp.n, p)
