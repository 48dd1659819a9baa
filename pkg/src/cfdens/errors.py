"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Mismatched shapes or grids between objects that must agree."""


class DomainError(ValueError):
    """Values outside the mathematical domain of an operation."""


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class ConfigError(ValueError):
    """Invalid configuration or model specification."""


class NumericError(RuntimeError):
    """Unexpected numerical degeneracy (rank loss, singular information)."""


class ConvergenceError(RuntimeError):
    """Optimizer failed to converge; carries the deviance trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
