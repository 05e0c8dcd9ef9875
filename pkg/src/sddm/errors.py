"""Exception hierarchy shared by every module."""


class SDDMError(Exception):
    """Base class for all package errors."""


class InvalidModel(SDDMError, ValueError):
    """A domain type invariant does not hold."""


class NonConvergent(SDDMError, ArithmeticError):
    """A moment series diverges for the given parameters."""


class TooLarge(SDDMError, ValueError):
    """Exact enumeration would exceed the feasibility bound."""


class EstimationError(SDDMError, ValueError):
    """Estimation preconditions are not met."""


class NonPositiveDividend(EstimationError):
    pass


class EmptyBucket(EstimationError):
    pass


class NoOverlap(EstimationError):
    pass


class DegenerateRegressor(EstimationError):
    pass


class DegenerateProblem(SDDMError, ValueError):
    """The portfolio problem has no unique solution."""
