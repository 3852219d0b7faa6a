"""Exception types raised across the package."""


class CodedConvError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CodedConvError, ValueError):
    """An argument violates a precondition (shape, range or divisibility)."""


class IllConditionedError(CodedConvError, ArithmeticError):
    """A decode matrix is too badly conditioned to invert reliably."""
