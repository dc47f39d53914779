"""Exception hierarchy shared by every layer of the package."""


class DeftraceError(Exception):
    """Base class for all package errors."""


class DomainError(DeftraceError, ValueError):
    """An argument lies outside the domain of a deformed function."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class DegenerateParameterError(DeftraceError, ValueError):
    """A parameter combination for which the requested quantity is undefined."""


class BranchUnavailableError(DeftraceError, ValueError):
    """The requested closed form has no branch at these parameters (e.g. p = 1)."""


class NumericError(DeftraceError, ArithmeticError):
    """Linear algebra failure or a numerical health check that did not pass."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context or {}


class ConditioningError(NumericError):
    """An input is too close to singular for the requested evaluation."""


class ConfigError(DeftraceError, ValueError):
    """Invalid run configuration (CLI exit status 3)."""
