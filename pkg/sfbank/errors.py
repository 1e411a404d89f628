"""
Exception hierarchy for sfbank.

Every library error carries the process exit code the CLI maps it to:
validation problems (bad arguments, mismatched shapes) exit 2, numeric
failures exit 3.
"""


class SfbankError(Exception):
    """Base class for all sfbank errors."""
    exit_code = 3


class ValidationFailure(SfbankError, ValueError):
    """An input violates a precondition; nothing was computed."""
    exit_code = 2


class InvalidArgumentError(ValidationFailure):
    pass


class InvalidExponentError(ValidationFailure):
    """Compression exponent outside (0, 1]."""


class ShapeMismatchError(ValidationFailure):
    """Channel count, bin count or STFT configuration does not line up."""


class GeometryMismatchError(ValidationFailure):
    """A filter is evaluated on a geometry or frequency it was not designed for."""


class TooShortSignalError(ValidationFailure):
    """Signal shorter than one analysis window."""


class NonColaError(ValidationFailure):
    """Window/hop pair cannot be inverted by weighted overlap-add."""


class NumericFailure(SfbankError, ArithmeticError):
    """A computation could not produce a finite, well-defined result."""
    exit_code = 3


class BesselDomainError(NumericFailure):
    """Order or argument outside the supported Bessel envelope."""


class DegenerateFrequencyError(NumericFailure):
    """A Bessel denominator vanishes and regularization is disabled."""


class NonFiniteError(NumericFailure):
    pass


class ZeroEnergyError(NumericFailure):
    """SNR mixing requested against a signal with no energy."""
