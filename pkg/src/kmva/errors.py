"""Exception and warning types shared across the package."""


class KMVAError(Exception):
    """Base class for all package errors."""


class UsageError(KMVAError, ValueError):
    """Invalid or incompatible options."""


class DataError(KMVAError, ValueError):
    """Malformed, inconsistent or degenerate input data."""


class NumericalError(KMVAError, ArithmeticError):
    """A numerical routine failed (non-convergence, degenerate problem)."""


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RankWarning(UserWarning):
    """Requested more directions than the problem rank supports."""
