"""Exception hierarchy shared by all richkde modules."""


class RichKDEError(Exception):
    """Base class for errors raised by richkde."""


class InvalidArgumentError(RichKDEError, ValueError):
    """An argument violates a documented precondition."""


class IllConditionedBandwidthsError(RichKDEError, ValueError):
    """Bandwidths are too close together (or weights too large) to extrapolate safely."""


class SingularSystemError(RichKDEError, ArithmeticError):
    """The dense weight system is numerically singular."""


class NoFeasibleWeightsError(RichKDEError, ArithmeticError):
    """The constrained weight equation has no real solution."""


class DomainError(RichKDEError, ValueError):
    """Argument outside the domain of a special function."""


class NumericalFailureError(RichKDEError, ArithmeticError):
    """An iterative method failed to converge."""


class NumericalOverflowError(RichKDEError, OverflowError):
    """A result does not fit in double precision."""


class IllConditionedWarning(RuntimeWarning):
    """A solve completed but its accuracy cannot be trusted."""
