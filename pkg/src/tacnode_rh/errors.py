"""Exception and warning types raised by the numerical routines."""


class TacnodeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(TacnodeError, ValueError):
    pass


class InvalidParameterError(InvalidArgumentError):
    pass


class IllConditionedError(TacnodeError):
    pass


class ConvergenceError(TacnodeError):
    pass


class OverflowGuardError(TacnodeError, OverflowError):
    pass


class BranchCutError(InvalidArgumentError):
    pass


class OnContourError(InvalidArgumentError):
    """Raised when a point lies on a jump ray of a Riemann-Hilbert problem."""


class NearDiagonalError(InvalidArgumentError):
    pass


class IntegrationError(TacnodeError):
    pass


class CrossCheckError(TacnodeError):
    """Two independent computations disagree beyond tolerance."""

    def __init__(self, message, first=None, second=None):
        super().__init__(message)
        self.first = first
        self.second = second


class ConsistencyError(TacnodeError):
    pass


class TruncationError(TacnodeError):
    pass


class PrecisionWarning(UserWarning):
    pass
