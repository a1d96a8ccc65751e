"""Exception types shared across the package.

Parse errors carry the file kind and 1-based line number where the problem
was found so that CLI and HTTP layers can point at the offending row.
"""

from __future__ import annotations


class CapmineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(CapmineError):
    """A malformed input file."""

    def __init__(self, message: str, *, kind: str | None = None, line: int | None = None):
        self.kind = kind
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        prefix = ""
        if self.kind:
            prefix = self.kind
            if self.line is not None:
                prefix += f" line {self.line}"
            prefix += ": "
        elif self.line is not None:
            prefix = f"line {self.line}: "
        return prefix + super().__str__()


class EmptyFile(ParseError):
    pass


class DuplicateAttribute(ParseError):
    pass


class BadHeader(ParseError):
    pass


class MalformedRow(ParseError):
    pass


class QuotedField(ParseError):
    pass


class UnknownAttribute(ParseError):
    pass


class CoordinateOutOfRange(ParseError):
    pass


class DuplicateSensor(ParseError):
    pass


class BadTimestamp(ParseError):
    pass


class BadValue(ParseError):
    pass


class SingleTimestamp(ParseError):
    pass


class IrregularGrid(ParseError):
    pass


class OrphanRecord(ParseError):
    pass


class ConflictingValue(ParseError):
    pass


class MissingChunks(CapmineError):
    """Commit attempted while declared chunks are still absent."""

    def __init__(self, missing: list[tuple[str, int]]):
        self.missing = missing
        listing = ", ".join(f"{kind}[{seq}]" for kind, seq in missing)
        super().__init__(f"missing chunks: {listing}")


class SessionClosed(CapmineError):
    pass


class OverlappingSegments(CapmineError):
    pass


class NegativeEpsilon(CapmineError):
    pass


class NegativeEta(CapmineError):
    pass


class UnknownSensor(CapmineError):
    pass


class TooLarge(CapmineError):
    pass


class InvalidParams(CapmineError):
    pass


class NotFound(CapmineError):
    pass


class KeyMismatch(CapmineError):
    pass


class IoFailure(CapmineError):
    pass


class StorageFull(IoFailure):
    pass
