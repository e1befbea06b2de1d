"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed user input: bad parameters, files or shapes."""


class ConfigurationError(InputError):
    """A requested option is incompatible with the scan/grid setup."""


class DegenerateLineError(ValueError):
    """The line has no extent in the XY plane (purely axial ray)."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite or otherwise unusable values."""
