"""Exception hierarchy shared by the library and the CLI exit codes."""


class RegimeForecastError(Exception):
    """Base class for all package errors."""


class DataError(RegimeForecastError, ValueError):
    """Malformed or unusable input data (CLI exit status 2)."""


class NumericError(RegimeForecastError, ArithmeticError):
    """Non-finite likelihood, loss or parameter (CLI exit status 3)."""
