"""Exception hierarchy shared by every module of the package."""

__all__ = [
    "ExtremalArraysError",
    "InvalidParameterError",
    "InvalidDimensionError",
    "NotPositiveDefiniteError",
    "InvalidVariogramError",
    "ScheduleTooEarlyError",
    "UnsupportedLawError",
    "NoSolutionError",
    "DomainError",
    "TooLargeError",
    "ConfigError",
]


class ExtremalArraysError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ExtremalArraysError, ValueError):
    pass


class InvalidDimensionError(InvalidParameterError):
    pass


class NotPositiveDefiniteError(ExtremalArraysError, ValueError):
    pass


class InvalidVariogramError(ExtremalArraysError, ValueError):
    pass


class ScheduleTooEarlyError(NotPositiveDefiniteError):
    """Sigma_n = 11' - Gamma/c_n is not positive definite for this c_n."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class UnsupportedLawError(ExtremalArraysError, ValueError):
    pass


class NoSolutionError(ExtremalArraysError, ArithmeticError):
    pass


class DomainError(ExtremalArraysError, ValueError):
    pass


class TooLargeError(ExtremalArraysError, ValueError):
    pass


class ConfigError(ExtremalArraysError, ValueError):
    """Structured configuration error.

    ``code`` is a stable short identifier, ``field`` the dotted path of the
    offending entry in the JSON document.
    """

    def __init__(self, code: str, field: str, message: str):
        super().__init__(f"[{code}] {field}: {message}")
        self.code = code
        self.field = field
