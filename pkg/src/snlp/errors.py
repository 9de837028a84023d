"""Exception hierarchy.

Validation errors (bad input, domain violations) and numerical failures are
kept apart because the command line maps them to different exit codes.
"""


class SnlpError(Exception):
    """Base class for all package errors."""


class ValidationError(SnlpError, ValueError):
    """Invalid specification, configuration or argument."""


class DomainError(ValidationError):
    """An argument lies outside the domain of the operation."""


class UnsupportedSpecError(ValidationError):
    """The operation needs a closed form that this process does not have."""


class DegenerateInputError(ValidationError):
    """The inputs make the requested quantity undefined (e.g. 0/0)."""


class ResolutionError(ValidationError):
    """The time or level step is too coarse for the jump intensity."""


class NumericalError(SnlpError, ArithmeticError):
    """A numerical routine failed to deliver a trustworthy answer."""


class BracketError(NumericalError):
    def __init__(self, message, lo, hi):
        super().__init__(f"{message} (bracket state lo={lo!r}, hi={hi!r})")
        self.lo = lo
        self.hi = hi


class PrecisionLossError(NumericalError):
    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (estimated relative error {error_estimate:.3g})")
        self.error_estimate = error_estimate


class DegeneracyError(NumericalError):
    """The h-transform step has (almost) no admissible proposals."""
