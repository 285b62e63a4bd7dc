"""Extended non-negative reals and the grading monoids.

Finite sensitivities are exact rationals. Following the metric-space
conventions used throughout, infinity absorbs both addition and
multiplication, including ``0 * inf == inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import total_ordering

from .errors import MonoidMismatch

__all__ = [
    "ExtReal", "INF", "ZERO", "ONE", "ext_add", "ext_mul", "ext_max",
    "format_rational", "parse_rational",
    "UNIT", "ED", "KL", "XD", "HD", "MONOIDS",
    "Grade", "unit_grade", "grade_compose", "grade_leq", "grade_join",
]


def parse_rational(text: str) -> Fraction:
    """Parse ``3``, ``0.25``, ``-1.5`` or ``1/3`` exactly."""
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def format_rational(q: Fraction) -> str:
    """Shortest exact text for ``q``: integer, terminating decimal, or ``p/q``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    scaled = q * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


@total_ordering
class ExtReal:
    """A value in [0, inf]. Finite values are stored as ``Fraction``."""

    __slots__ = ("_v",)

    def __init__(self, value=0):
        if isinstance(value, ExtReal):
            self._v = value._v
            return
        if isinstance(value, str):
            if value.strip().lower() in ("inf", "infinity", "∞"):
                self._v = None
                return
            value = parse_rational(value)
        elif isinstance(value, float):
            if math.isinf(value) and value > 0:
                self._v = None
                return
            if math.isnan(value):
                raise ValueError("NaN is not an extended real")
            value = Fraction(value)
        elif isinstance(value, Decimal):
            value = Fraction(value)
        value = Fraction(value)
        if value < 0:
            raise ValueError(f"extended reals are non-negative, got {value}")
        self._v = value

    @property
    def is_inf(self) -> bool:
        return self._v is None

    @property
    def finite(self) -> Fraction:
        if self._v is None:
            raise ValueError("infinite value has no finite part")
        return self._v

    def __add__(self, other):
        other = _coerce(other)
        if self._v is None or other._v is None:
            return INF
        return ExtReal(self._v + other._v)

    __radd__ = __add__

    def __mul__(self, other):
        other = _coerce(other)
        if self._v is None or other._v is None:
            return INF
        return ExtReal(self._v * other._v)

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._v == other._v

    def __lt__(self, other):
        other = _coerce(other)
        if self._v is None:
            return False
        if other._v is None:
            return True
        return self._v < other._v

    def __hash__(self):
        return hash(("ExtReal", self._v))

    def __float__(self):
        return math.inf if self._v is None else float(self._v)

    def __str__(self):
        return "inf" if self._v is None else format_rational(self._v)

    def __repr__(self):
        return f"ExtReal({str(self)!r})"


def _coerce(x) -> ExtReal:
    return x if isinstance(x, ExtReal) else ExtReal(x)


INF = ExtReal("inf")
ZERO = ExtReal(0)
ONE = ExtReal(1)


def ext_add(a, b) -> ExtReal:
    return _coerce(a) + _coerce(b)


def ext_mul(a, b) -> ExtReal:
    return _coerce(a) * _coerce(b)


def ext_max(a, b) -> ExtReal:
    a, b = _coerce(a), _coerce(b)
    return a if a >= b else b


# -- grading monoids ---------------------------------------------------------

UNIT = "UNIT"
ED = "ED"
KL = "KL"
XD = "XD"
HD = "HD"
MONOIDS = (UNIT, ED, KL, XD, HD)

_ARITY = {UNIT: 0, ED: 2, KL: 1, XD: 1, HD: 1}


@dataclass(frozen=True)
class Grade:
    monoid: str
    values: tuple = ()

    def __post_init__(self):
        if self.monoid not in _ARITY:
            raise ValueError(f"unknown monoid {self.monoid!r}")
        vals = tuple(float(v) for v in self.values)
        if len(vals) != _ARITY[self.monoid]:
            raise ValueError(f"{self.monoid} grade takes {_ARITY[self.monoid]} components")
        if any(not v >= 0 for v in vals):
            raise ValueError(f"grade components must be non-negative: {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def unit(cls) -> "Grade":
        return cls(UNIT)

    @classmethod
    def ed(cls, eps, delta) -> "Grade":
        return cls(ED, (eps, delta))

    @classmethod
    def kl(cls, alpha) -> "Grade":
        return cls(KL, (alpha,))

    @classmethod
    def xd(cls, alpha) -> "Grade":
        return cls(XD, (alpha,))

    @classmethod
    def hd(cls, alpha) -> "Grade":
        return cls(HD, (alpha,))

    @property
    def eps(self) -> float:
        return self.values[0]

    @property
    def delta(self) -> float:
        return self.values[1]

    @property
    def alpha(self) -> float:
        return self.values[0]

    def payload_text(self) -> str:
        if self.monoid == ED:
            return f"({self.values[0]!r}, {self.values[1]!r})"
        if self.monoid == UNIT:
            return ""
        return repr(self.values[0])

    def __str__(self):
        if self.monoid == UNIT:
            return "()@UNIT"
        if self.monoid == ED:
            return f"({self.values[0]!r},{self.values[1]!r})@ED"
        return f"{self.values[0]!r}@{self.monoid}"

    def __mul__(self, other: "Grade") -> "Grade":
        return grade_compose(self, other)

    def __le__(self, other: "Grade") -> bool:
        return grade_leq(self, other)


def unit_grade(monoid: str) -> Grade:
    if monoid == UNIT:
        return Grade(UNIT)
    return Grade(monoid, (0.0,) * _ARITY[monoid])


def _same(a: Grade, b: Grade) -> None:
    if a.monoid != b.monoid:
        raise MonoidMismatch(f"cannot combine {a} with {b}")


def grade_compose(a: Grade, b: Grade) -> Grade:
    _same(a, b)
    m = a.monoid
    if m == UNIT:
        return a
    if m == ED:
        return Grade(ED, (a.values[0] + b.values[0], a.values[1] + b.values[1]))
    x, y = a.values[0], b.values[0]
    if m == KL:
        return Grade(KL, (x + y,))
    if m == XD:
        return Grade(XD, (x + y + x * y,))
    return Grade(HD, (math.hypot(x, y),))


def grade_leq(a: Grade, b: Grade) -> bool:
    _same(a, b)
    return all(x <= y for x, y in zip(a.values, b.values))


def grade_join(a: Grade, b: Grade) -> Grade:
    """Least upper bound under ``grade_leq`` (componentwise max)."""
    _same(a, b)
    return Grade(a.monoid, tuple(max(x, y) for x, y in zip(a.values, b.values)))
