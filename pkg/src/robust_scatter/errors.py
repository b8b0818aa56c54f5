"""Exception hierarchy shared by every module of the package."""

__all__ = [
    "RobustScatterError",
    "NotPositiveDefinite",
    "DimensionMismatch",
    "InvalidBandwidth",
    "InvalidSize",
    "InvalidPermutation",
    "InvalidShape",
    "DomainError",
    "RankDeficientData",
    "DivergedWeights",
    "NotPerfectOrder",
    "NonChordalPattern",
    "NotDiagonallyDominant",
    "PreconditionViolation",
    "DataShapeMismatch",
    "ParseError",
    "WrongShape",
    "ConfigError",
    "MaxIterExceeded",
]


class RobustScatterError(Exception):
    """Base class for all errors raised by robust_scatter."""


class NotPositiveDefinite(RobustScatterError, ValueError):
    pass


class DimensionMismatch(RobustScatterError, ValueError):
    pass


class InvalidBandwidth(RobustScatterError, ValueError):
    pass


class InvalidSize(RobustScatterError, ValueError):
    pass


class InvalidPermutation(RobustScatterError, ValueError):
    pass


class InvalidShape(RobustScatterError, ValueError):
    """Raised for an MGGD shape parameter that is not strictly positive."""


class DomainError(RobustScatterError, ValueError):
    """A rho function was evaluated outside the region where it is finite."""


class RankDeficientData(RobustScatterError, ValueError):
    """The observations do not span the ambient space (or a needed subspace)."""


class DivergedWeights(RobustScatterError, FloatingPointError):
    pass


class NotPerfectOrder(RobustScatterError, ValueError):
    """The natural vertex order is not a perfect elimination order of the pattern."""


class NonChordalPattern(RobustScatterError, ValueError):
    pass


class NotDiagonallyDominant(RobustScatterError, ValueError):
    pass


class PreconditionViolation(RobustScatterError, ValueError):
    """A solver was asked to run outside the regime where it is well posed."""


class DataShapeMismatch(RobustScatterError, ValueError):
    pass


class ParseError(RobustScatterError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class WrongShape(RobustScatterError, ValueError):
    pass


class ConfigError(RobustScatterError, ValueError):
    pass


class MaxIterExceeded(RobustScatterError, RuntimeError):
    """An iterative solver hit its budget.

    The best iterate found so far is attached as ``result`` (a FitReport for
    the fitting routines, a scatter matrix for the inner graphical solver).
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
