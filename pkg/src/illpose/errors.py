"""Exception hierarchy shared by all modules."""


class IllposeError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(IllposeError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailure(IllposeError, RuntimeError):
    """A numerical kernel (SVD, eigensolver) did not converge."""

    def __init__(self, message, label=None):
        super().__init__(message if label is None else f"{label}: {message}")
        self.label = label


class PreconditionViolation(IllposeError, ValueError):
    """A derived precondition (e.g. bounded quotient) does not hold."""


class ConfigError(IllposeError, ValueError):
    """Experiment configuration is malformed or references unknown names."""
