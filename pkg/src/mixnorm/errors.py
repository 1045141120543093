"""Exception types shared across the package.

Everything raised on purpose derives from :class:`MixnormError`, so callers
(the CLI in particular) can separate expected numerical/validation failures
from genuine bugs.
"""


class MixnormError(Exception):
    """Base class for all errors raised by this package."""


class InvalidExponentError(MixnormError, ValueError):
    """The norm exponent q is outside [1, inf]."""


class DimensionError(MixnormError, ValueError):
    """Array shapes or group layouts do not line up."""


class InputError(MixnormError, ValueError):
    """Input data is unusable (non-finite entries, empty vectors, ...)."""


class InvalidParameterError(MixnormError, ValueError):
    """A scalar parameter (lambda, tolerance, iteration cap) is out of range."""


class BracketError(MixnormError, RuntimeError):
    """A zero-finding bracket lost its sign change; internal invariant broke."""


class DivergenceError(MixnormError, RuntimeError):
    """The objective became non-finite; bad initial step size or bad data."""


class LineSearchError(MixnormError, RuntimeError):
    """The backtracking step-size search exceeded its hard cap."""


class OracleSizeError(MixnormError, ValueError):
    """The brute-force oracle was asked for a dimension it cannot enumerate."""
