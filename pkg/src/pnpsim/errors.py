"""Exception hierarchy.

Everything raised deliberately by the package derives from :class:`PNPError`.
The CLI maps :class:`ConfigurationError` to exit code 1 and
:class:`NumericalError` to exit code 2.
"""


class PNPError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PNPError, ValueError):
    """Invalid user input: parameters, configuration files, call arguments."""


class NumericalError(PNPError, ArithmeticError):
    """A computation ran but produced an unusable result."""


class BelowThreshold(ConfigurationError):
    """The pump does not exceed the lasing threshold N_th / tau_s."""


class InvalidCount(ConfigurationError):
    pass


class ShiftCollision(ConfigurationError):
    pass


class NyquistViolation(ConfigurationError):
    """Step size too coarse for the fastest forcing frequency in a run."""


class NumericalBlowup(NumericalError):
    """Field or carrier left the physical range during integration."""


class EmptyRecord(ConfigurationError):
    pass


class WindowOverlap(ConfigurationError):
    pass


class EmptyWindow(ConfigurationError):
    pass


class BandwidthExceeded(ConfigurationError):
    pass


class InvalidRange(ConfigurationError):
    pass


class BaselineMissing(PNPError, LookupError):
    """No cached no-input baseline matches the requested configuration."""


class DegenerateTraining(ConfigurationError):
    pass


class DimensionMismatch(ConfigurationError):
    pass


class TargetOutOfRange(ConfigurationError):
    pass


class ParseError(ConfigurationError):
    """Malformed configuration text; message carries line and column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(ConfigurationError):
    """Unknown or mistyped configuration key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UnitError(ConfigurationError):
    """A physical value outside its admissible range."""


class KindMismatch(ConfigurationError):
    pass
