"""Gauss-Laguerre quadrature oracle for the projected system.

|psi_theta|^2 is a product of exponential densities (rate beta in x, rate
zeta in each y_i), so inner products against the trial family reduce, after
the change of variables u = beta*x, v_i = zeta*y_i, to integrals with unit
exponential weight on [0, inf).  Tensorized Gauss-Laguerre rules evaluate
them; a rule of order q is exact for polynomials of degree <= 2q - 1 per
variable, and every integrand assembled here is polynomial.

The rule itself is built from scratch (Newton iteration on the classical
three-term recurrence) so that it can serve as an oracle for the printed
closed forms rather than depending on them.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure
from .model import MarketParams, SpacePoint, rhs_F
from .trial import TrialState, trial_jet_normalized

__all__ = [
    "laguerre_rule",
    "expect_psi2",
    "assemble_mv_quadrature",
    "moment_identities",
]

MAX_ORDER = 64

_rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_meshes: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def laguerre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the order-q Gauss-Laguerre rule (weight e^-s).

    Newton iteration from the standard asymptotic initial guesses; each node
    is polished to relative tolerance 1e-14.  Results are cached.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in [1, {MAX_ORDER}]")
    if order in _rules:
        return _rules[order]

    def eval_ln(z: float) -> tuple[float, float, float]:
        # recurrence (j+1) L_{j+1} = (2j+1-z) L_j - j L_{j-1}
        p1, p2 = 1.0, 0.0
        for j in range(order):
            p1, p2 = ((2 * j + 1 - z) * p1 - j * p2) / (j + 1), p1
        return p1, p2, order * (p1 - p2) / z  # L_n, L_{n-1}, L_n'

    x = np.empty(order)
    w = np.empty(order)
    z = 0.0
    for i in range(order):
        if i == 0:
            z = 3.0 / (1.0 + 2.4 * order)
        elif i == 1:
            z += 15.0 / (1.0 + 2.5 * order)
        else:
            ai = float(i - 1)
            z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - x[i - 2])
        for _ in range(100):
            p1, _, pp = eval_ln(z)
            z -= p1 / pp
            if abs(p1 / pp) <= 1e-14 * max(abs(z), 1.0):
                break
        else:
            raise ConvergenceFailure(f"Laguerre node {i} of order {order} stalled")
        _, p2, pp = eval_ln(z)
        x[i] = z
        w[i] = -1.0 / (pp * order * p2)
    x.flags.writeable = False
    w.flags.writeable = False
    _rules[order] = (x, w)
    return x, w


def _tensor_mesh(order: int, dims: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened unit-rate product rule: nodes (dims, order^dims), weights."""
    key = (order, dims)
    if key in _meshes:
        return _meshes[key]
    s, w = laguerre_rule(order)
    grids = np.meshgrid(*([s] * dims), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids])
    wgrids = np.meshgrid(*([w] * dims), indexing="ij")
    weights = wgrids[0].ravel().copy()
    for g in wgrids[1:]:
        weights *= g.ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    _meshes[key] = (nodes, weights)
    return nodes, weights


def _scaled_points(s: TrialState, n: int, order: int) -> tuple[SpacePoint, np.ndarray]:
    nodes, weights = _tensor_mesh(order, 1 + n)
    x = nodes[0] / s.beta
    y = nodes[1:] / s.zeta if n else np.zeros((0, nodes.shape[1]))
    return SpacePoint(x, y), weights


def expect_psi2(s: TrialState, n: int, g, order: int = 8) -> float:
    """E[g(x, y)] under the |psi_theta|^2 product density.

    ``g`` maps (x, y) with x of shape (m,) and y of shape (n, m) to values
    of shape (m,).  Exact whenever g is polynomial of degree <= 2*order - 1
    in each variable.
    """
    p, weights = _scaled_points(s, n, order)
    return float(np.dot(weights, g(p.x, p.y)))


def _tangent_weights(s: TrialState, n: int, p: SpacePoint) -> np.ndarray:
    """Rows g_i with du/dtheta_i = g_i * u: 1, (1 - beta x)/2, (n - zeta sum y)/2."""
    g = np.empty((3 if n else 2, p.x.size))
    g[0] = 1.0
    g[1] = 0.5 * (1.0 - s.beta * p.x)
    if n:
        g[2] = 0.5 * (n - s.zeta * p.ysum)
    return g


def assemble_mv_quadrature(
    mp: MarketParams, s: TrialState, order: int = 8
) -> tuple[np.ndarray, np.ndarray]:
    """Mass matrix and load vector of the projected flow, by quadrature.

    M_ij = <du/dtheta_i, du/dtheta_j> and V_i = <du/dtheta_i, F(u_theta)>,
    with F evaluated through :func:`nghjb.model.rhs_F` on the closed-form
    jet (in u-normalized form, using F's homogeneity); no printed M/V
    formula enters.  Requires order >= 4 for exactness (highest
    per-variable monomial degree is 3).
    """
    n = mp.n
    p, weights = _scaled_points(s, n, order)
    f_over_u = rhs_F(mp, p, trial_jet_normalized(s, n))
    g = _tangent_weights(s, n, p)
    a2 = np.exp(2.0 * s.log_alpha)
    gw = g * weights
    m = a2 * (gw @ g.T)
    v = a2 * (gw @ f_over_u)
    return 0.5 * (m + m.T), v


def moment_identities(n: int, b: float, order: int = 8) -> list[dict]:
    """Check the closed-form moments of |psi|^2 at rates a = zeta = b.

    Returns one record per identity with the quadrature value, the expected
    closed form and the relative error.  For n = 0 only the x-moment exists.
    """
    s = (
        TrialState(0.0, np.log(b))
        if n == 0
        else TrialState(0.0, np.log(b), np.log(b))
    )
    checks = [("mean_x", lambda x, y: x, 1.0 / b)]
    if n >= 1:
        checks += [
            ("mean_y", lambda x, y: y[0], 1.0 / b),
            (
                "pair_products_yy",
                lambda x, y: np.sum(y, axis=0) ** 2,
                n * (n + 1) / b ** 2,
            ),
            (
                "sum_yi2_yj",
                lambda x, y: np.sum(y * y, axis=0) * np.sum(y, axis=0),
                2.0 * n * (n + 2) / b ** 3,
            ),
            (
                "triple_products_yyy",
                lambda x, y: np.sum(y, axis=0) ** 3,
                n * (n + 1) * (n + 2) / b ** 3,
            ),
        ]
    out = []
    for name, g, expected in checks:
        got = expect_psi2(s, n, g, order)
        rel = abs(got - expected) / abs(expected)
        out.append(
            {"identity": name, "n": n, "b": b, "value": got,
             "expected": expected, "rel_err": rel}
        )
    return out
