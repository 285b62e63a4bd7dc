"""Exception hierarchy shared by every gfuzz module.

Each error carries a short machine-readable ``code`` and an optional source
span so the CLI can emit structured diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class GFuzzError(Exception):
    code = "error"

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message

    def to_record(self) -> dict:
        return {
            "code": self.code,
            "span": None if self.span is None else {"line": self.span.line, "column": self.span.column},
            "message": self.message,
        }


class ParseError(GFuzzError):
    code = "syntax"

    @property
    def line(self) -> int | None:
        return None if self.span is None else self.span.line

    @property
    def column(self) -> int | None:
        return None if self.span is None else self.span.column


class MonoidMismatch(GFuzzError):
    code = "monoid-mismatch"


class TypeMismatch(GFuzzError):
    code = "type-mismatch"


class UnboundVariable(GFuzzError):
    code = "unbound-variable"


class SensitivityExceeded(GFuzzError):
    code = "sensitivity-exceeded"


class UnknownPrimitive(GFuzzError):
    code = "unknown-primitive"


class InvalidStaticArg(GFuzzError):
    code = "invalid-static-arg"


class SubsumptionFailure(GFuzzError):
    code = "subsumption-failure"

    def __init__(self, message: str, pairs=(), span: Span | None = None):
        super().__init__(message, span)
        self.pairs = tuple(pairs)


class RuntimeTypeError(GFuzzError):
    code = "runtime-type"


class GridTooCoarse(GFuzzError):
    code = "grid-too-coarse"


class GridTooLarge(GFuzzError):
    code = "grid-too-large"


class TruncationTooSmall(GFuzzError):
    code = "truncation-too-small"


class CarrierTooLarge(GFuzzError):
    code = "carrier-too-large"


class EnumerationTooLarge(GFuzzError):
    code = "enumeration-too-large"


class TypeShapeMismatch(GFuzzError):
    code = "type-shape"


class InvalidDistribution(GFuzzError):
    code = "invalid-distribution"


class MetricViolation(GFuzzError):
    code = "metric-violation"
