"""Exception hierarchy shared across the package.

The CLI maps :class:`ConfigError` and :class:`InputError` to exit code 1 and
:class:`NumericalError` to exit code 2.
"""


class BatchKBError(Exception):
    """Base class for all package errors."""


class ConfigError(BatchKBError, ValueError):
    """Invalid configuration or parameter value."""


class InputError(BatchKBError, ValueError):
    """Malformed input data (shapes, lengths, points outside the domain)."""


class NumericalError(BatchKBError, ArithmeticError):
    """A factorization or variance computation broke down."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class LogicError(BatchKBError, RuntimeError):
    """An algorithm invariant was breached."""


class ConstructionError(BatchKBError, ValueError):
    """A generated instance failed its own verification."""
