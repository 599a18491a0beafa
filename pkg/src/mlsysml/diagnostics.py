"""Diagnostic records shared by the parser and the validator.

One record = one finding at one source location, carrying a stable code
(P-xxx parse, E-xxx error, W-xxx warning, I-xxx info). Streams are always
sorted by (file, line, code, column) so repeated runs are byte-identical.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .model import SourceSpan


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    message: str
    span: SourceSpan
    related: tuple[SourceSpan, ...] = field(default_factory=tuple)

    def format_human(self) -> str:
        return (
            f"{self.span.file}:{self.span.line}:{self.span.column}: "
            f"{self.severity} {self.code}: {self.message}"
        )

    def to_json(self) -> dict:
        return {
            "code": self.code,
            "severity": str(self.severity),
            "file": self.span.file,
            "line": self.span.line,
            "column": self.span.column,
            "message": self.message,
        }


def sort_key(diag: Diagnostic) -> tuple:
    return (diag.span.file, diag.span.line, diag.code, diag.span.column)


def sorted_diagnostics(diags: list[Diagnostic]) -> tuple[Diagnostic, ...]:
    return tuple(sorted(diags, key=sort_key))


def has_errors(diags: tuple[Diagnostic, ...] | list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)
