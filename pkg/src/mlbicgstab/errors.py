"""Exception types raised by the solver library."""

import numpy as np


class InvalidArgumentError(ValueError):
    """Dimension mismatch, out-of-range index or otherwise bad input."""


class ConfigurationError(ValueError):
    """Inconsistent solver configuration."""


class InsufficientDataError(ValueError):
    """Not enough solver history to compute the requested statistic."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Dense LU met a numerically zero pivot."""


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int or None
        1-based line number in the input stream, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Breakdown(ArithmeticError):
    """A divisor vanished (or underflowed) inside a Krylov recurrence.

    Solvers catch this and report ``flag = -1``; ``reason`` names the
    divisor, e.g. ``"zero_c"`` or ``"tiny_Au"``.
    """

    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)
