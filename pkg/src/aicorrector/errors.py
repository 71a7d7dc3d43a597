"""Exception hierarchy shared by the library and the command line."""


class CorrectorError(ValueError):
    """Invalid user input: bad data, bad parameters, malformed files."""


class NumericalError(ArithmeticError):
    """A numerical procedure could not produce a usable result."""


class ModelFormatError(CorrectorError):
    """A model document is malformed, truncated or of an unknown version."""
