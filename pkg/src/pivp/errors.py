"""Exception types shared across the package."""


class PivpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PivpError):
    """Operands disagree on the ambient dimension, or a vector is empty."""


class ParameterError(PivpError):
    """A numeric argument lies outside its admissible range."""


class DomainError(PivpError):
    """A mathematical operation was requested outside its domain of validity."""


class ProblemFormatError(PivpError):
    """A problem file failed to parse or validate.

    ``location`` names the offending field, e.g. ``"polys[1][0].exponents"``.
    """

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
