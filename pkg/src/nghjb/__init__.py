"""Nonlinear Galerkin solver for exponential-utility HJB equations.

The time-dependent HJB equation from indifference pricing is projected onto
a family of exponential trial functions, turning the PDE into a small ODE
system for the trial parameters.  The projection integrals are evaluated two
independent ways (closed form and Gauss-Laguerre quadrature), and the trial
solution is cross-checked against a finite-difference solve of the full PDE
and against Monte Carlo simulation of the controlled wealth process.
"""

from ._accel import backend_name
from .errors import (
    CflViolation,
    ConfigError,
    ConvergenceFailure,
    DomainMismatch,
    InvalidBranch,
    NoSignChange,
    NotPositiveDefinite,
    SingularHessian,
)
from .fd import ErrorReport, Field, Grid, cfl_bound, error_report, init_field, solve, step
from .galerkin import (
    GalerkinSystem,
    Trajectory,
    assemble_closed,
    assemble_quadrature,
    integrate,
    mass_matrix_discrepancy,
    solve_step_direction,
)
from .mc import (
    McConfig,
    McEstimate,
    optimal_control_exposure,
    simulate_expected_utility,
    trial_policy,
    z_score,
)
from .model import MarketParams, SpacePoint, UJet, rhs_F, sing_threshold, terminal_payoff
from .pricing import (
    PriceQuery,
    indifference_price_bisect,
    indifference_price_closed,
    trial_evaluator,
)
from .quadrature import assemble_mv_quadrature, expect_psi2, laguerre_rule, moment_identities
from .trial import (
    RateConstants,
    TrialState,
    evolve,
    initial_params,
    rate_constants,
    trial_jet,
    trial_jet_normalized,
    trial_value,
    value_function,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "CflViolation",
    "ConfigError",
    "ConvergenceFailure",
    "DomainMismatch",
    "InvalidBranch",
    "NoSignChange",
    "NotPositiveDefinite",
    "SingularHessian",
    "ErrorReport",
    "Field",
    "Grid",
    "cfl_bound",
    "error_report",
    "init_field",
    "solve",
    "step",
    "GalerkinSystem",
    "Trajectory",
    "assemble_closed",
    "assemble_quadrature",
    "integrate",
    "mass_matrix_discrepancy",
    "solve_step_direction",
    "McConfig",
    "McEstimate",
    "optimal_control_exposure",
    "simulate_expected_utility",
    "trial_policy",
    "z_score",
    "MarketParams",
    "SpacePoint",
    "UJet",
    "rhs_F",
    "sing_threshold",
    "terminal_payoff",
    "PriceQuery",
    "indifference_price_bisect",
    "indifference_price_closed",
    "trial_evaluator",
    "assemble_mv_quadrature",
    "expect_psi2",
    "laguerre_rule",
    "moment_identities",
    "RateConstants",
    "TrialState",
    "evolve",
    "initial_params",
    "rate_constants",
    "trial_jet",
    "trial_jet_normalized",
    "trial_value",
    "value_function",
    "__version__",
]
