"""Exception types shared across the package."""


class SingularHessian(ArithmeticError):
    """Second wealth derivative too close to zero for the controlled HJB term."""


class ConvergenceFailure(RuntimeError):
    """An iterative root search failed to reach tolerance."""


class NotPositiveDefinite(ArithmeticError):
    """Galerkin mass matrix failed its SPD factorization."""


class CflViolation(ValueError):
    """Requested explicit time step exceeds the stability bound."""


class DomainMismatch(ValueError):
    """Fields or grids are not comparable (different box, dimension or nesting)."""


class NoSignChange(ValueError):
    """Bisection bracket does not straddle a root."""


class InvalidBranch(ValueError):
    """Requested solution branch is inconsistent with the market setup."""


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""
