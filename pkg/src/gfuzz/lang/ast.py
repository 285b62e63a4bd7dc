"""Types and terms of graded Fuzz.

Nodes are frozen dataclasses; source spans are carried along but excluded
from equality so that ``parse(pretty(t)) == t`` compares structure only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from ..errors import Span
from ..numerics import ED, HD, KL, UNIT, XD, ExtReal, Grade

# divergence families that may index a monad
MD = "MD"
SD = "SD"
DIVERGENCES = (MD, SD, ED, KL, XD, HD)
DIV_MONOID = {MD: UNIT, SD: UNIT, ED: ED, KL: KL, XD: XD, HD: HD}

BASE_TYPES = ("Real", "Unit", "CeilReal", "Db", "Bool", "Nat")

# primitive names known to the parser; signatures live in gfuzz.typecheck
PRIMITIVE_NAMES = frozenset(
    ["Laplace", "Gaussian", "Normal", "Poisson", "Bernoulli",
     "size", "count", "to_real", "add_ceil"]
)
_AC_RE = re.compile(r"AC_(\d+)$")


def is_primitive_name(name: str) -> bool:
    return name in PRIMITIVE_NAMES or _AC_RE.match(name) is not None


def ac_iterations(name: str) -> int | None:
    m = _AC_RE.match(name)
    return int(m.group(1)) if m else None


# -- types -------------------------------------------------------------------

class Type:
    __slots__ = ()


@dataclass(frozen=True)
class Base(Type):
    name: str

    def __post_init__(self):
        if self.name not in BASE_TYPES:
            raise ValueError(f"unknown base type {self.name!r}")


@dataclass(frozen=True)
class Hole(Type):
    """Unknown summand of an un-annotated injection; compatible with anything."""


@dataclass(frozen=True)
class Lolli(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True)
class Tensor(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class With(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class Sum(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class Bang(Type):
    scale: ExtReal
    body: Type

    def __post_init__(self):
        object.__setattr__(self, "scale", ExtReal(self.scale))
        if self.scale == 0:
            raise ValueError("!-annotation must be positive")


@dataclass(frozen=True)
class Monad(Type):
    div: str
    grade: Grade
    body: Type

    def __post_init__(self):
        if self.div not in DIV_MONOID:
            raise ValueError(f"unknown divergence {self.div!r}")
        if self.grade.monoid != DIV_MONOID[self.div]:
            raise ValueError(f"{self.div} monad cannot carry grade {self.grade}")


REAL = Base("Real")
UNIT_T = Base("Unit")
CEIL = Base("CeilReal")
DB = Base("Db")
BOOL = Base("Bool")
NAT = Base("Nat")


# -- terms -------------------------------------------------------------------

class Term:
    __slots__ = ()


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Term):
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class RealConst(Term):
    value: Decimal
    span: Span | None = _span()

    def __post_init__(self):
        v = self.value
        if isinstance(v, Fraction):
            v = Decimal(v.numerator) / Decimal(v.denominator)
        object.__setattr__(self, "value", Decimal(v))


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class UnitVal(Term):
    span: Span | None = _span()


@dataclass(frozen=True)
class Lam(Term):
    param: str
    ptype: Type
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class TensorPair(Term):
    left: Term
    right: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class LetTensor(Term):
    x: str
    y: str
    bound: Term
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class WithPair(Term):
    left: Term
    right: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Proj(Term):
    index: int
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class BangIntro(Term):
    scale: ExtReal
    body: Term
    span: Span | None = _span()

    def __post_init__(self):
        object.__setattr__(self, "scale", ExtReal(self.scale))


@dataclass(frozen=True)
class LetBang(Term):
    x: str
    bound: Term
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Inl(Term):
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Inr(Term):
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Case(Term):
    scrutinee: Term
    lvar: str
    lbody: Term
    rvar: str
    rbody: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Return(Term):
    div: str
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Bind(Term):
    x: str
    bound: Term
    body: Term
    span: Span | None = _span()


@dataclass(frozen=True)
class Prim(Term):
    name: str
    args: tuple = ()
    span: Span | None = _span()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


BINDER_TERMS = (Lam, Bind, LetBang, LetTensor, Case, Return)


def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, (RealConst, UnitVal, Prim)):
        return frozenset()
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, (Bind, LetBang)):
        return free_vars(t.bound) | (free_vars(t.body) - {t.x})
    if isinstance(t, LetTensor):
        return free_vars(t.bound) | (free_vars(t.body) - {t.x, t.y})
    if isinstance(t, Case):
        return (free_vars(t.scrutinee) | (free_vars(t.lbody) - {t.lvar})
                | (free_vars(t.rbody) - {t.rvar}))
    if isinstance(t, (Add, App, TensorPair, WithPair)):
        a, b = (t.fn, t.arg) if isinstance(t, App) else (t.left, t.right)
        return free_vars(a) | free_vars(b)
    if isinstance(t, (Proj, BangIntro, Inl, Inr, Return)):
        return free_vars(t.body)
    raise TypeError(f"not a term: {t!r}")
