"""Exception hierarchy.

Every error raised by the library derives from :class:`AttoqoError`.  The
command line maps :class:`ConfigError` to exit status 2,
:class:`SelectionEfficiencyError` to 4 and every other library error to 3.
"""


class AttoqoError(Exception):
    """Base class for library errors."""


class NumericError(AttoqoError):
    """A numerical precondition was violated."""


class DimensionError(NumericError, ValueError):
    pass


class DomainError(NumericError, ValueError):
    pass


class StructureError(NumericError, ValueError):
    pass


class ResolutionError(NumericError, ValueError):
    pass


class TruncationError(NumericError, ValueError):
    pass


class NyquistError(NumericError, ValueError):
    pass


class CoverageError(NumericError, ValueError):
    pass


class OrderingError(NumericError, ValueError):
    pass


class InputError(NumericError, ValueError):
    pass


class PhysicalityError(NumericError, ValueError):
    pass


class StationarityError(NumericError, ValueError):
    pass


class PrecisionError(NumericError, ValueError):
    pass


class ZeroNormError(NumericError, ValueError):
    """Conditioning on an event of probability zero."""


class SelectionEfficiencyError(AttoqoError):
    """Too few shots survived post-selection."""

    def __init__(self, message: str, acceptance: float = 0.0):
        self.acceptance = acceptance
        super().__init__(f"{message} (acceptance rate {acceptance:.3g})")


class ConfigError(AttoqoError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
