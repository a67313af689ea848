"""Exception types shared across the package."""

from __future__ import annotations


class AnomstreamError(Exception):
    """Base class for every error raised by this package."""


class MetadataError(AnomstreamError):
    """Malformed or inconsistent sensor metadata."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(AnomstreamError):
    """A run configuration field violates its invariant."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class WireParseError(AnomstreamError):
    """A message deviates from the wire template.

    The fast parser reports the byte offset where the template broke; the
    validating reference parser reports 1-based line and column instead.
    """

    def __init__(
        self,
        message: str,
        *,
        offset: int | None = None,
        line: int | None = None,
        column: int | None = None,
    ):
        where = []
        if offset is not None:
            where.append(f"offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.offset = offset
        self.line = line
        self.column = column


class StateError(AnomstreamError):
    """Internal reuse-state inconsistency; indicates a bug, not bad input."""
