"""Utility indifference price of k forward units of sum(Y_i).

The buyer's price p(k) at t = 0 solves V^(k)(0, x0 - p, y0) = V^(0)(0, x0,
y0): paying p and holding the claim leaves the investor indifferent to not
trading it.  Both branches of the trial value function share beta(T), so the
log-solve has the closed form below and p never depends on x0.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBranch, NoSignChange
from .model import MarketParams, SpacePoint
from .trial import evolve, initial_params, rate_constants, value_function

__all__ = ["PriceQuery", "indifference_price_closed", "indifference_price_bisect"]


@dataclass(frozen=True)
class PriceQuery:
    """Pricing inputs: market (with its k), initial wealth and factor levels."""

    mp: MarketParams
    x0: float = 1.0
    y0: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if y0.size == 1 and self.mp.n > 1:
            y0 = np.full(self.mp.n, y0[0])  # scalar broadcasts across factors
        if y0.size != self.mp.n:
            raise ValueError(f"y0 must carry n = {self.mp.n} components")
        if np.any(y0 < 0.0):
            raise ValueError("y0 must be componentwise non-negative")
        object.__setattr__(self, "y0", y0)


def indifference_price_closed(q: PriceQuery, mode: str = "oracle") -> float:
    """Closed-form log-solve of the defining equality.

    p = (2/beta(T)) [log a_0(T) - log a_k(T) - (n/2) log z_k(T)
                     + z_k(T) sum(y0) / 2],
    subscript 0 the claim-free branch, k the k-unit branch.

    The k -> 0+ limit of this trial price does not vanish: the two branches
    project the generator onto different parameter families, and their rate
    constants differ by y-projection terms of order a0^2 T.  The residual
    limit is a measure of trial-family projection error, not a property of
    the exact price (which is continuous at k = 0).
    """
    mp = q.mp
    if mp.k == 0.0:
        return 0.0
    if mp.n == 0:
        raise InvalidBranch("k > 0 requires at least one factor (n >= 1)")
    mp0 = dataclasses.replace(mp, n=0, k=0.0)
    s0 = evolve(initial_params(mp0), rate_constants(mp0, mode), mp.T)
    sk = evolve(initial_params(mp), rate_constants(mp, mode), mp.T)
    beta = sk.beta  # equals s0.beta: both branches share c_beta = r
    return (2.0 / beta) * (
        s0.log_alpha
        - sk.log_alpha
        - 0.5 * mp.n * sk.log_zeta
        + 0.5 * sk.zeta * float(np.sum(q.y0))
    )


def indifference_price_bisect(
    left,
    right,
    q: PriceQuery,
    bracket: tuple[float, float] = (-10.0, 10.0),
    tol: float = 1e-12,
) -> float:
    """Bisection solve of left(0, x0 - p, y0) = right(0, x0, y0).

    ``left`` and ``right`` map (t, x, y) to a value-function level; the
    left evaluator is monotone in wealth so the root is unique.  The root is
    localized to an interval of width <= tol.
    """
    target = right(0.0, q.x0, q.y0)

    def g(p: float) -> float:
        return left(0.0, q.x0 - p, q.y0) - target

    lo, hi = float(bracket[0]), float(bracket[1])
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if math.copysign(1.0, glo) == math.copysign(1.0, ghi):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):  # interval at float resolution
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if math.copysign(1.0, gm) == math.copysign(1.0, glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def trial_evaluator(mp: MarketParams, mode: str = "oracle"):
    """Value-function evaluator (t, x, y) -> V for bisection use."""

    def ev(t: float, x: float, y: np.ndarray) -> float:
        return float(value_function(mp, t, SpacePoint(x, np.asarray(y, dtype=float)), mode))

    return ev
