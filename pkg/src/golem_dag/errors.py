"""Exception types raised across the package."""


class GolemError(Exception):
    """Base class for all package errors."""


class SingularMatrixError(GolemError, ArithmeticError):
    pass


class NumericOverflowError(GolemError, OverflowError):
    pass


class DegenerateResidualError(GolemError, ArithmeticError):
    """A residual sum of squares is not strictly positive (exact interpolation)."""


class NotADagError(GolemError, ValueError):
    pass


class UndefinedMetricError(GolemError, ValueError):
    pass


class DivergenceError(GolemError, RuntimeError):
    """Optimization produced a non-finite score or gradient.

    The partial trace up to the failing iterate is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
