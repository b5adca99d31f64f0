"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): bad input
(:class:`ValidationError`, exit code 1) and numerical failure
(:class:`NumericalError`, exit code 2).
"""


class CRNError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(CRNError, ValueError):
    """Input violates a documented precondition."""

    exit_code = 1


class NumericalError(CRNError, RuntimeError):
    """A computation could not be carried out within its numeric limits."""

    exit_code = 2


class CapExceededError(NumericalError):
    """State enumeration grew beyond the allowed cap."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class BoxTooLargeError(NumericalError):
    """Truncation box holds more states than the oracle accepts."""


class ReducibleTruncationError(NumericalError):
    """Truncated chain has no unique closed communicating class."""

    def __init__(self, message, n_closed):
        super().__init__(message)
        self.n_closed = n_closed


class ThresholdError(NumericalError):
    """A bound was requested outside its validity window."""

    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = threshold
