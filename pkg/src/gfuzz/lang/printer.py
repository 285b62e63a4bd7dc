"""Pretty printer producing text that ``parse`` maps back to the same AST."""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

from ..numerics import ONE, format_rational
from . import ast as A

# term precedence levels
_BINDER, _SUM, _APP, _PREFIX, _ATOM = range(5)
# type precedence levels
_T_LOLLI, _T_SUM, _T_PROD, _T_UNARY, _T_ATOM = range(5)


def format_decimal(d: Decimal) -> str:
    text = format(d, "f")
    return text


def _static(arg) -> str:
    if isinstance(arg, str):
        return arg
    return format_rational(Fraction(arg))


def pretty_type(t: A.Type, level: int = _T_LOLLI) -> str:
    if isinstance(t, A.Base):
        return t.name
    if isinstance(t, A.Hole):
        return "_"
    if isinstance(t, A.Lolli):
        text, own = f"{pretty_type(t.dom, _T_SUM)} -o {pretty_type(t.cod, _T_LOLLI)}", _T_LOLLI
    elif isinstance(t, A.Sum):
        text, own = f"{pretty_type(t.left, _T_SUM)} + {pretty_type(t.right, _T_PROD)}", _T_SUM
    elif isinstance(t, (A.Tensor, A.With)):
        op = "*" if isinstance(t, A.Tensor) else "&"
        text, own = f"{pretty_type(t.left, _T_PROD)} {op} {pretty_type(t.right, _T_UNARY)}", _T_PROD
    elif isinstance(t, A.Bang):
        text, own = f"!{{{t.scale}}} {pretty_type(t.body, _T_UNARY)}", _T_UNARY
    elif isinstance(t, A.Monad):
        payload = t.grade.payload_text()
        head = f"O[{t.div} {payload}]" if payload else f"O[{t.div}]"
        text, own = f"{head} {pretty_type(t.body, _T_UNARY)}", _T_UNARY
    else:
        raise TypeError(f"not a type: {t!r}")
    return f"({text})" if own < level else text


def pretty_term(t: A.Term, level: int = _BINDER) -> str:
    if isinstance(t, A.Var):
        return t.name
    if isinstance(t, A.RealConst):
        return format_decimal(t.value)
    if isinstance(t, A.UnitVal):
        return "()"
    if isinstance(t, A.Prim):
        if not t.args:
            return t.name
        return f"{t.name}[{', '.join(_static(a) for a in t.args)}]"
    if isinstance(t, A.TensorPair):
        return f"({pretty_term(t.left)}, {pretty_term(t.right)})"
    if isinstance(t, A.WithPair):
        left = pretty_term(t.left)
        # "<-" would lex as the bind arrow
        pad = " " if left.startswith("-") else ""
        return f"<{pad}{left}, {pretty_term(t.right)}>"

    if isinstance(t, A.Lam):
        text = f"\\({t.param} : {pretty_type(t.ptype)}). {pretty_term(t.body)}"
        own = _BINDER
    elif isinstance(t, A.Bind):
        text = f"bind {t.x} <- {_guard(t.bound)}; {pretty_term(t.body)}"
        own = _BINDER
    elif isinstance(t, A.LetBang):
        text = f"let !{t.x} = {_guard(t.bound)} in {pretty_term(t.body)}"
        own = _BINDER
    elif isinstance(t, A.LetTensor):
        text = f"let ({t.x}, {t.y}) = {_guard(t.bound)} in {pretty_term(t.body)}"
        own = _BINDER
    elif isinstance(t, A.Case):
        text = (f"case {_guard(t.scrutinee)} of inl {t.lvar}. {_guard(t.lbody)} "
                f"| inr {t.rvar}. {pretty_term(t.rbody)}")
        own = _BINDER
    elif isinstance(t, A.Return):
        text = f"return[{t.div}] {pretty_term(t.body)}"
        own = _BINDER
    elif isinstance(t, A.Add):
        text = f"{pretty_term(t.left, _SUM)} + {pretty_term(t.right, _APP)}"
        own = _SUM
    elif isinstance(t, A.App):
        text = f"{pretty_term(t.fn, _APP)} {pretty_term(t.arg, _PREFIX)}"
        own = _APP
    elif isinstance(t, A.Proj):
        text = f"pi{t.index} {pretty_term(t.body, _PREFIX)}"
        own = _PREFIX
    elif isinstance(t, (A.Inl, A.Inr)):
        kw = "inl" if isinstance(t, A.Inl) else "inr"
        text = f"{kw} {pretty_term(t.body, _PREFIX)}"
        own = _PREFIX
    elif isinstance(t, A.BangIntro):
        head = "!" if t.scale == ONE else f"!{{{t.scale}}} "
        text = f"{head}{pretty_term(t.body, _PREFIX)}"
        own = _PREFIX
    else:
        raise TypeError(f"not a term: {t!r}")
    return f"({text})" if own < level else text


def _guard(t: A.Term) -> str:
    """Parenthesize binder forms in positions followed by more syntax."""
    text = pretty_term(t)
    return f"({text})" if isinstance(t, A.BINDER_TERMS) else text


def pretty(node) -> str:
    if isinstance(node, A.Type):
        return pretty_type(node)
    return pretty_term(node)
