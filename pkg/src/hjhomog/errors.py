"""Shared exception types for configuration, domain, and numerical failures."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (bad names, mixed regimes, CFL violation)."""


class DomainError(ValueError):
    """Input outside an operation's mathematical domain (e.g. micro potential with min != 0)."""


class RangeError(ValueError):
    """Query outside a tabulated range."""


class GridMismatchError(ValueError):
    """Two fields live on incompatible grids."""


class InfeasibleQueryError(ValueError):
    """Endpoints not connectable under the speed bound."""


class NumericalError(RuntimeError):
    """Iteration failed to converge, or a minimizer saturated the speed bound."""


class FitError(RuntimeError):
    """Rate fit impossible (nonpositive errors in a log-log fit)."""
