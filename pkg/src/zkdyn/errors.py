"""Exception hierarchy.

Validation problems (bad input, bad models) derive from :class:`ValidationError`,
failures of the numerical estimators from :class:`NumericalError`. The CLI maps
the two families to distinct exit codes.
"""


class ZkError(Exception):
    """Base class for all package errors."""


class ValidationError(ZkError, ValueError):
    pass


class NumericalError(ZkError, ArithmeticError):
    pass


class CommutationViolation(ValidationError):
    pass


class NotInvertible(ValidationError):
    pass


class WordTooLong(ValidationError):
    pass


class GammaOutOfRange(ValidationError):
    pass


class NotCommutingExact(CommutationViolation):
    pass


class NotUnimodular(ValidationError):
    pass


class NotIntegerMatrix(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EpsilonTooLarge(ValidationError):
    pass


class NotSimultaneouslyDiagonalizable(ValidationError):
    """Raised when no joint eigenbasis is found; estimate the spectrum numerically instead."""


class NumericalBlowup(NumericalError):
    pass


class DegenerateFrame(NumericalError):
    pass


class GroupingAmbiguity(NumericalError):
    pass


class NotRational(ZkError):
    """The direction has no small-denominator rationalization."""
