"""Exception hierarchy shared by all modules."""


class BubbleTowerError(Exception):
    """Base class for package errors."""


class ValidationError(BubbleTowerError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(BubbleTowerError, ArithmeticError):
    """Non-finite values, singular systems and similar breakdowns."""


class ConsistencyError(BubbleTowerError, RuntimeError):
    """Two independent evaluation routes disagree beyond tolerance.

    This always signals an implementation bug.
    """


class ConvergenceError(BubbleTowerError, RuntimeError):
    """An iterative solver failed to converge."""
