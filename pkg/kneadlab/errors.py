"""Exception hierarchy shared by all kneadlab services."""

from typing import Any, Optional


class KneadlabError(Exception):
    """Base class for every error raised by kneadlab."""


class InputError(KneadlabError, ValueError):
    """Malformed or out-of-contract input (CLI exit status 2)."""


class ConfigError(InputError):
    """System config could not be parsed or failed validation."""


class DomainError(InputError):
    """A branch was evaluated outside its domain."""


class RangeError(InputError):
    """A branch was inverted outside its image."""


class StructuralError(InputError):
    """Shapes do not line up: degree caps, matrix sizes, system signatures."""


class ShapeError(InputError):
    """System is not of the special two-branch overlapping form."""


class DegenerateSeriesError(KneadlabError, ValueError):
    """Root search was asked to work on a series that is zero mod t^(M+1)."""


class PreconditionError(KneadlabError, ValueError):
    """An operation precondition failed; ``witness`` names the offending data."""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness


class NodeBudgetExceeded(KneadlabError, RuntimeError):
    """Word enumeration hit the node budget; ``partial`` holds completed levels."""

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class NotApplicableError(KneadlabError):
    """The s0 < s hypothesis needed by root/measure methods does not hold."""


class InconsistencyError(KneadlabError, AssertionError):
    """Two computations that must agree did not; ``data`` carries both sides."""

    def __init__(self, message: str, data: Optional[Any] = None):
        super().__init__(message)
        self.data = data
