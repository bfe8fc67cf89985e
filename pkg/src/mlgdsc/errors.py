"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`MLGError`. The CLI
maps :class:`NumericalError` to exit code 1 and everything else to exit 2.
"""


class MLGError(Exception):
    """Base class for toolkit errors."""


class InputError(MLGError, ValueError):
    """Invalid input values (e.g. non-finite entries)."""


class SizeError(InputError):
    """Shapes or lengths are inconsistent or too small."""


class ParameterError(InputError):
    """A parameter is out of its admissible range."""


class ConfigError(ParameterError):
    """Malformed configuration file or infeasible configuration."""


class FormatError(InputError):
    """A file does not follow its expected layout."""


class ParseError(FormatError):
    """A token in a text file could not be parsed."""


class EmptyInputError(FormatError):
    """A file that must contain data is empty."""


class BadMagicError(FormatError):
    """Binary matrix file does not start with the expected magic bytes."""


class TruncatedError(FormatError):
    """Binary matrix file is shorter than its header promises."""


class NonFiniteError(InputError):
    """A matrix contains NaN or infinite values."""


class ModelError(MLGError, ValueError):
    """An out-of-sample model cannot be built or used."""


class NumericalError(MLGError, ArithmeticError):
    """A linear-algebra routine failed to converge."""
