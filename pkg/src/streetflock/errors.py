"""Shared exception types."""

from __future__ import annotations


class StreetflockError(Exception):
    """Base class for all package errors."""


class ConfigError(StreetflockError, ValueError):
    """Invalid run configuration: bad weights, beta, schedule, CLI flags."""


class ContractViolationError(StreetflockError, RuntimeError):
    """A call contract or internal invariant was broken."""


class GraphParseError(StreetflockError, ValueError):
    """Malformed graph file; carries the offending 1-based line number."""

    def __init__(self, path: object, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class GraphReferenceError(StreetflockError, ValueError):
    """An edge refers to a node that was never declared."""

    def __init__(self, path: object, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no
