"""Exception types shared across the package."""


class HullkitError(Exception):
    """Base class for all hullkit errors."""


class DimensionMismatch(HullkitError):
    pass


class NotPositiveDefinite(HullkitError):
    pass


class SingularSubmatrix(HullkitError):
    pass


class NoConvergence(HullkitError):
    pass


class TooManySupports(HullkitError):
    pass


class UnsupportedSupportFamily(HullkitError):
    pass


class InvalidParameters(HullkitError):
    pass


class InfeasibleMultipliers(HullkitError):
    pass


class DegenerateT(HullkitError):
    pass


class InfeasibleZ(HullkitError):
    pass


class DimensionTooLarge(HullkitError):
    pass


class NumericalBreakdown(HullkitError):
    pass


class InvalidDelta(HullkitError):
    pass


class UnsupportedSign(HullkitError):
    pass


class ParseError(HullkitError):
    """Malformed text input; carries a 1-based line and column."""

    def __init__(self, message, line, column=0):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column
