"""
Errors module for Symflow Project
This module defines the exception hierarchy raised by the Datalog engine.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceLocation:
    """Line/column position inside a Datalog source text (1-based)."""
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class DatalogError(Exception):
    """Base class for every engine error."""

    def __init__(self, message: str, location: Optional[SourceLocation] = None):
        self.message = message
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class DatalogSyntaxError(DatalogError):
    """Malformed program text."""


class ArityError(DatalogError):
    """Atom or fact row whose arity differs from the relation declaration."""


class UnknownPredicate(DatalogError):
    """Reference to a relation that was never declared."""


class SafetyError(DatalogError):
    """Rule violates range restriction or negation safety."""


class StratificationError(DatalogError):
    """A negative or non-monotonic dependency lies inside a recursive cycle."""


class FunctorError(DatalogError):
    """A functor is unknown, misused, or raised during a call."""


class DuplicateFunctor(FunctorError):
    """A functor name was registered twice."""


class ResourceLimit(DatalogError):
    """A relation grew beyond the configured tuple cap."""


class UnknownOrdinal(DatalogError):
    """Symbol ordinal that was never issued by this engine."""


class UnknownRecordRef(DatalogError):
    """Record reference that was never issued by this engine."""


class MalformedList(DatalogError):
    """A value expected to be a list-record is not a 2-field chain ending in nil."""


class FactTypeError(DatalogError):
    """A fact token does not fit its declared column type."""


class FactIOError(DatalogError):
    """A fact directory or file could not be read or written."""
