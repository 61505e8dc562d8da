"""Exception types shared across the package."""


class AdiaprepError(Exception):
    """Base class for all package errors."""


class ConfigError(AdiaprepError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class NumericalError(AdiaprepError, ArithmeticError):
    """Numerical failure (CLI exit code 3)."""


class GapClosureError(NumericalError):
    """The tracked band touches the rest of the spectrum somewhere on the path."""

    def __init__(self, message, s=None, gap=None):
        super().__init__(message)
        self.s = s
        self.gap = gap


class ConvergenceError(NumericalError):
    """An iterative eigensolver did not converge."""


class NoDecayError(NumericalError):
    """Exponential fit found a non-negative slope or too few usable points."""


class RegisterTooLargeError(AdiaprepError, MemoryError):
    """Requested matrix materialization beyond the configured qubit cap."""
