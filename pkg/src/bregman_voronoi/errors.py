"""Exception hierarchy.

Two families: :class:`ValidationError` for bad inputs (CLI exit code 2) and
:class:`NumericalError` for numerical breakdowns (CLI exit code 3).
"""


class BregmanError(Exception):
    """Base class for all package errors."""


class ValidationError(BregmanError, ValueError):
    pass


class NumericalError(BregmanError, ArithmeticError):
    pass


class DomainError(ValidationError):
    """A point lies outside (or on the boundary of) an open domain."""


class DimensionMismatch(ValidationError):
    pass


class EmptyDomain(ValidationError):
    pass


class UnsupportedError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TooManySubsets(ValidationError):
    pass


class EmptyFeasibleSet(ValidationError):
    pass


class EmptyRegion(ValidationError):
    pass


class DegenerateSites(ValidationError):
    pass


class NonFiniteError(NumericalError):
    pass


class DegenerateInput(NumericalError):
    pass


class DegenerateSimplex(NumericalError):
    pass


class NonTermination(NumericalError):
    pass


class GeneralPositionWarning(UserWarning):
    """Four lifted sites were found (numerically) coplanar."""
