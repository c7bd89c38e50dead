"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError`` (and its subclasses) to exit status 1 and
``ComputationError`` to exit status 2.
"""

from __future__ import annotations


class MaassLabError(Exception):
    """Base class for all library errors."""


class ValidationError(MaassLabError, ValueError):
    """Malformed input or a violated precondition."""


class DomainError(ValidationError):
    """Argument outside the domain where an operation is defined."""


class PoleError(DomainError):
    """Argument sits on a pole of the function being evaluated."""


class ParseError(ValidationError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


class GapError(ValidationError):
    """Coefficient data needed by a computation is not available."""


class ComputationError(MaassLabError, RuntimeError):
    """A numerical procedure failed to meet its tolerance."""


class ConvergenceError(ComputationError):
    """Quadrature or iteration did not converge.

    ``estimate`` and ``error`` hold the best value reached and its error
    estimate so callers can still inspect them.
    """

    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class TruncationError(ComputationError):
    """A certified tail bound exceeds the requested tolerance."""

    def __init__(self, message: str, bound: float | None = None):
        super().__init__(message)
        self.bound = bound
