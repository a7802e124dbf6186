"""Exception types shared across the toolkit."""

from __future__ import annotations


class SotkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SotkitError):
    """A domain object violates one of its invariants."""


class ParseError(SotkitError):
    """An input file or stream could not be parsed.

    Carries the 1-based line number when the error is positional.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MetricError(SotkitError):
    """A metric is undefined for the given inputs (e.g. empty reference)."""
