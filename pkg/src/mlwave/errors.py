"""Exception taxonomy shared by all mlwave modules.

The CLI maps these onto process exit codes: domain/config problems exit 1,
numeric failures exit 2, verification-suite failures exit 3.
"""


class MLWaveError(Exception):
    """Base class for all library errors."""


class DomainError(MLWaveError, ValueError):
    """Arguments outside an operation's documented domain."""


class ConfigError(DomainError):
    """Invalid scenario or operator configuration."""


class AccuracyError(MLWaveError, ArithmeticError):
    """A summation or quadrature could not reach the requested tolerance."""


class NumericOverflowError(AccuracyError, OverflowError):
    """An internal summation produced a non-finite value."""


class NumericFailure(MLWaveError, ArithmeticError):
    """NaN or other numeric breakdown inside a solver; carries context."""

    def __init__(self, message, time_index=None):
        super().__init__(message)
        self.time_index = time_index


class OverflowSignal(MLWaveError):
    """Internal signal: pointwise nonlinearity evaluation left the floating
    range.  Window drivers convert this into a blow-up / window-failure path;
    it never escapes the public API."""
