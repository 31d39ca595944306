"""Exception types shared across the package."""


class QcfaError(Exception):
    """Base class for all package errors."""


class InvalidInputError(QcfaError):
    """Input string contains symbols outside the machine alphabet."""


class MachineFormatError(QcfaError):
    """Machine file cannot be parsed or serialized."""


class SemanticsError(QcfaError):
    """A step was attempted that the model forbids (e.g. head off-tape)."""


class ExactnessError(QcfaError):
    """An operation left the exactly-representable state space."""


class NonHaltingError(QcfaError):
    """Both per-pass halting probabilities are zero."""


class ResourceError(QcfaError):
    """A sweep or simulation exceeds its configured budget."""


class FitError(QcfaError):
    """Degenerate data passed to a regression."""


class CompileError(QcfaError):
    """Machine/input pair cannot be compiled to a finite run graph."""
