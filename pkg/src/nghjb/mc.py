"""Monte Carlo verification of the candidate optimal control.

Simulates the wealth equation dX = rX dt + e (lam dt + dB) under an exposure
policy e(t, x, y), alongside the factor dynamics dY_i = b0 Y_i dt +
a0 Y_i dW_i with corr(B, W_i) = rho, and compares the sample mean of
U(X_T + k sum(Y_T)) against the trial value function.

The policy quotes the volatility-scaled dollar position theta*sigma*s, so the
tradable asset's sigma and price level never enter the dynamics.  sigma_mc is
accepted for interface compatibility only; paired runs at different sigma_mc
share every random draw and return identical estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularHessian
from .model import MarketParams, SpacePoint, UJet, sing_threshold
from .trial import TrialState, evolve, initial_params, rate_constants, trial_jet

__all__ = [
    "McConfig",
    "McEstimate",
    "optimal_control_exposure",
    "trial_policy",
    "simulate_expected_utility",
    "z_score",
]

# Paths per Philox substream.  Each block b draws from counter b << 192, so
# blocks can never overlap regardless of steps and the path count only
# changes how many substreams are consumed, not their contents.
BLOCK = 16384


@dataclass(frozen=True)
class McConfig:
    """Simulation controls; sigma_mc is accepted but cancels (see module doc)."""

    paths: int = 100_000
    steps: int = 2000
    seed: int = 0
    sigma_mc: float = 0.2

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.sigma_mc > 0.0:
            raise ValueError("sigma_mc must be positive")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean and standard error of terminal utility, plus the fraction
    of paths whose wealth went negative (admissibility diagnostic, never
    enforced: exponential utility is defined on all of R)."""

    mean: float
    stderr: float
    neg_wealth_frac: float


def optimal_control_exposure(mp: MarketParams, p: SpacePoint, jet: UJet):
    """Exposure maximizing the quadratic-in-control generator term.

    Returns theta* sigma s = -(rho a0 sum_i y_i phi_xy_i + lam phi_x) / phi_xx
    for the value function phi.  The ratio is invariant under phi -> c phi,
    so the jet of u = -phi (or any positive multiple) works unchanged.
    """
    if np.any(jet.u_xx <= sing_threshold(jet.u)):
        raise SingularHessian("u_xx at or below the singularity threshold")
    y = np.asarray(p.y, dtype=float)
    cross = 0.0
    for i in range(mp.n):
        cross = cross + y[i] * jet.mixed_xy[i]
    return -(mp.rho * mp.a0 * cross + mp.lam * jet.u_x) / jet.u_xx


def trial_policy(mp: MarketParams, mode: str = "oracle"):
    """Exposure policy (t, x, y) -> e induced by the exponential trial family.

    Evolves the trial parameters to reversed time T - t and reads the
    exposure off the trial jet; for the defaults this reduces to
    (2 lam - rho a0 zeta(T-t) sum(y)) / beta(T-t), independent of x.
    """
    s0 = initial_params(mp)
    rc = rate_constants(mp, mode)

    def policy(t: float, x, y):
        s = evolve(s0, rc, mp.T - t)
        p = SpacePoint(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return optimal_control_exposure(mp, p, trial_jet(s, mp.n, p))

    return policy


def simulate_expected_utility(
    mp: MarketParams,
    policy,
    x0: float,
    y0: np.ndarray,
    cfg: McConfig,
) -> McEstimate:
    """Euler scheme for (X, Y) under ``policy``; returns the utility estimate.

    The risk-free part of X compounds exactly (integrating factor exp(r dt))
    and the exposure term is explicit Euler.  The common Brownian B is built
    as rho * sum_i W_i + sqrt(1 - n rho^2) Z with Z independent, which gives
    corr(B, W_i) = rho for every i and requires n rho^2 <= 1.

    Identical (mp, policy, x0, y0, cfg) repeat bitwise: paths are split into
    fixed-size blocks, block b draws from its own Philox substream, and the
    block reductions are accumulated in block order.
    """
    n = mp.n
    cz2 = 1.0 - n * mp.rho * mp.rho
    if cz2 < 0.0:
        raise ValueError(
            f"equal pairwise correlation rho = {mp.rho} is infeasible for "
            f"n = {n} factors (needs n rho^2 <= 1)"
        )
    cz = math.sqrt(cz2)
    y0 = np.asarray(y0, dtype=float).reshape(n)

    dt = mp.T / cfg.steps
    sdt = math.sqrt(dt)
    growth = math.exp(mp.r * dt)

    s1 = 0.0
    s2 = 0.0
    umin = math.inf
    umax = -math.inf
    neg = 0
    nblocks = (cfg.paths + BLOCK - 1) // BLOCK
    for b in range(nblocks):
        m = min(BLOCK, cfg.paths - b * BLOCK)
        rng = np.random.Generator(np.random.Philox(key=cfg.seed, counter=b << 192))
        x = np.full(m, float(x0))
        y = np.repeat(y0[:, None], m, axis=1)
        xmin = x.copy()
        for step in range(cfg.steps):
            e = np.asarray(policy(step * dt, x, y), dtype=float)
            # rows 0..n-1 drive the factors, row n is the independent part of B
            z = rng.standard_normal((n + 1, m))
            dw = sdt * z[:n]
            db = mp.rho * dw.sum(axis=0) + (cz * sdt) * z[n]
            x = x * growth + e * (mp.lam * dt + db)
            if n:
                y = y * (1.0 + mp.b0 * dt + mp.a0 * dw)
            np.minimum(xmin, x, out=xmin)
        wealth = x + mp.k * y.sum(axis=0) if n else x
        util = -np.exp(-mp.gamma * wealth) / mp.gamma
        s1 += float(np.sum(util))
        s2 += float(np.sum(util * util))
        umin = min(umin, float(np.min(util)))
        umax = max(umax, float(np.max(util)))
        neg += int(np.count_nonzero(xmin < 0.0))

    frac = neg / cfg.paths
    if umin == umax:
        # degenerate sample (e.g. zero exposure): exactly zero variance,
        # which float summation of the squares would not quite produce
        return McEstimate(mean=umin, stderr=0.0, neg_wealth_frac=frac)
    mean = s1 / cfg.paths
    var = max(s2 - cfg.paths * mean * mean, 0.0) / (cfg.paths - 1)
    return McEstimate(mean=mean, stderr=math.sqrt(var / cfg.paths), neg_wealth_frac=frac)


def z_score(mean: float, stderr: float, target: float) -> float:
    """|mean - target| in standard errors; deterministic exact hits score 0."""
    diff = abs(mean - target)
    if stderr == 0.0:
        return 0.0 if diff <= 1e-9 * abs(target) else math.inf
    return diff / stderr
