"""Shared error types and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SrcLoc:
    """A position in a source file (1-based line/column)."""
    line: int
    col: int
    file: str = "<input>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    """A reported problem that does not abort processing."""
    code: str
    message: str
    loc: Optional[SrcLoc] = None
    severity: str = "error"  # "error" | "warning"

    def __str__(self) -> str:
        where = f"{self.loc}: " if self.loc else ""
        return f"{where}{self.severity}: [{self.code}] {self.message}"


class SizaxError(Exception):
    """Base class for all analyzer errors."""

    def __init__(self, message: str, loc: Optional[SrcLoc] = None):
        self.loc = loc
        where = f"{loc}: " if loc else ""
        super().__init__(where + message)


class ParseError(SizaxError):
    pass


class SimpleTypeError(SizaxError):
    pass


class UnboundSymbol(SizaxError):
    pass


class SkeletonMismatch(SizaxError):
    pass


class MatchFailure(SizaxError):
    pass


class NonCanonicalDeclaration(SizaxError):
    pass


class PatternNotBase(SizaxError):
    pass


class GeneralisationViolation(SizaxError):
    pass


class SubtypeFailure(SizaxError):
    pass


class UnsupportedRank(SizaxError):
    pass


class StuckTerm(SizaxError):
    pass


class NotData(SizaxError):
    pass


class SolverTimeout(SizaxError):
    pass
