"""Exception types shared across the package."""


class NumindexError(Exception):
    """Base class for all errors raised by numindex."""


class DimensionMismatchError(NumindexError):
    """Coordinate data does not match the dimension of its space."""


class LevelRangeError(NumindexError):
    """A projection or truncation level is outside the tower depth."""


class ZeroVectorError(NumindexError):
    """Operation undefined at the zero vector."""


class NonSmoothSpecError(NumindexError):
    """Requested a single norming functional on a non-smooth space."""


class DegenerateSupportError(NumindexError):
    """The projected point is zero, so the rescaling constant is undefined."""


class SpecValidationError(NumindexError):
    """A space description violates the supported exponent/shape rules."""
