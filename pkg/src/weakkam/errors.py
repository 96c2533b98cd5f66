"""Exception and warning types shared across the package."""


class WeakKAMError(Exception):
    """Base class for all errors raised by this package."""


class NumericError(WeakKAMError):
    """An error caused by the numbers themselves (divergence, negative cycles)."""


class VelocityOutOfBounds(WeakKAMError, ValueError):
    pass


class DimensionMismatch(WeakKAMError, ValueError):
    pass


class UnreachableError(WeakKAMError):
    """A kernel row, column or entry has no admissible path."""


class DisconnectedKernelError(NumericError):
    pass


class NegativeCycleError(NumericError):
    pass


class AcyclicError(NumericError):
    pass


class DivergenceError(NumericError):
    pass


class DominationViolation(WeakKAMError):
    def __init__(self, message, witness=None, violation=None):
        super().__init__(message)
        self.witness = witness
        self.violation = violation


class NotInCycleError(WeakKAMError):
    pass


class ConfigError(WeakKAMError):
    pass


class BoundaryMaximizerWarning(UserWarning):
    """The Legendre maximizer sits on the edge of the momentum grid."""


class NoAdmissibleMoveWarning(UserWarning):
    """The velocity bound is too small to leave a node within one substep."""


class ApproximateBarrierWarning(UserWarning):
    """Power period not found; a running minimum was used instead."""


class ToleranceSensitivityWarning(UserWarning):
    """A pseudometric value sits close to the class tolerance."""
