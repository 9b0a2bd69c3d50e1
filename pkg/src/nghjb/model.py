"""Market model and HJB right-hand side.

One tradable asset with Sharpe ratio ``lam`` plus ``n`` non-tradable
geometric Brownian factors Y_i (drift ``b0*y``, volatility ``a0*y``, each
correlated with the tradable's Brownian motion at level ``rho``).  The agent
has exponential utility U(x) = -exp(-gamma*x)/gamma and owes k*sum(Y_i) at
maturity T.  After time reversal u(t) = -phi(T-t) the value-function PDE is
du/dt = F(u) with F given by :func:`rhs_F`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularHessian

__all__ = ["MarketParams", "SpacePoint", "UJet", "terminal_payoff", "rhs_F"]


@dataclass(frozen=True)
class MarketParams:
    """Market and preference constants; defaults match the baseline experiment."""

    gamma: float = 0.5
    r: float = 0.05
    lam: float = 0.1
    a0: float = 0.3
    b0: float = 0.2
    rho: float = 0.1
    n: int = 0
    k: float = 0.0
    T: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.T < 0.0:
            raise ValueError("T must be non-negative")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("n must be a non-negative integer")
        if self.k < 0.0:
            raise ValueError("k must be non-negative")
        if abs(self.rho) > 1.0:
            raise ValueError("rho must lie in [-1, 1]")


@dataclass(frozen=True)
class SpacePoint:
    """Point(s) in the wealth/factor domain [0, inf)^(1+n).

    ``x`` is a scalar or array of wealth values, ``y`` has shape (n,) for a
    single point or (n, m) for a batch aligned with ``x``.
    """

    x: float | np.ndarray
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ysum(self):
        return np.sum(self.y, axis=0) if len(self.y) else 0.0


@dataclass(frozen=True)
class UJet:
    """Second-order jet of u at a point (or batch of points).

    ``grad_y`` and ``mixed_xy`` have shape (n, ...), ``hess_y`` (n, n, ...).
    """

    u: float | np.ndarray
    u_x: float | np.ndarray
    u_xx: float | np.ndarray
    grad_y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mixed_xy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hess_y: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def terminal_payoff(mp: MarketParams, p: SpacePoint):
    """Time-reversed initial datum u(0) = exp(-gamma*(x + k*sum(y)))/gamma."""
    return np.exp(-mp.gamma * (p.x + mp.k * p.ysum)) / mp.gamma


def sing_threshold(u):
    """Curvature magnitude below which the controlled term is ill-posed."""
    return 1e-12 * np.maximum(np.abs(u), 1.0)


def rhs_F(mp: MarketParams, p: SpacePoint, jet: UJet):
    """Evaluate the time-reversed HJB right-hand side F at ``p``.

    F = 1/2 a0^2 sum_i y_i^2 u_{y_i y_i} + r x u_x + b0 sum_i y_i u_{y_i}
        - (rho a0 sum_i y_i u_{x y_i} + lam u_x)^2 / (2 u_xx)

    Parameters
    ----------
    mp : MarketParams
    p : SpacePoint
        Evaluation point(s); ``p.y`` must carry ``mp.n`` factor coordinates.
    jet : UJet
        Jet of u at ``p``.  Scalar fields or arrays broadcasting against
        ``p.x``.

    Returns
    -------
    float or ndarray
        F evaluated elementwise.

    Raises
    ------
    SingularHessian
        If u_xx falls at or below ``sing_threshold(u)`` anywhere.
    """
    u_xx = np.asarray(jet.u_xx, dtype=float)
    if np.any(u_xx <= sing_threshold(jet.u)):
        raise SingularHessian("u_xx at or below singularity threshold")

    n = mp.n
    diff = 0.0
    drift = 0.0
    cross = 0.0
    for i in range(n):
        yi = p.y[i]
        diff = diff + yi * yi * jet.hess_y[i, i]
        drift = drift + yi * jet.grad_y[i]
        cross = cross + yi * jet.mixed_xy[i]
    num = mp.rho * mp.a0 * cross + mp.lam * jet.u_x
    return (
        0.5 * mp.a0 ** 2 * diff
        + mp.r * p.x * jet.u_x
        + mp.b0 * drift
        - num * num / (2.0 * u_xx)
    )
