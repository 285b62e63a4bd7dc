"""Recursive-descent parser for the ASCII concrete syntax.

Terms::

    \\(x : T). e        bind x <- e1; e2       return[D] e
    let !x = e in e'    let (x, y) = e in e'
    case e of inl x. e1 | inr y. e2
    e1 + e2   e1 e2   pi1 e   pi2 e   inl e   inr e   !e   !{r} e
    (e1, e2)   <e1, e2>   ()   1.5   x   Laplace[0.5]   count[adult]

Types::

    Real Unit CeilReal Db Bool Nat _   T -o T   T + T   T * T   T & T
    !{r} T   O[MD] T   O[ED (1.0, 0.1)] T   O[KL 0.5] T
"""

from __future__ import annotations

import re
from decimal import Decimal

from ..errors import ParseError, Span
from ..numerics import ExtReal, Grade, parse_rational
from . import ast as A

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?(?:/\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>-o|<-|[\\λ().,:;=|+*&!{}\[\]<>])
    """,
    re.VERBOSE,
)

KEYWORDS = frozenset(
    ["let", "in", "bind", "return", "case", "of", "inl", "inr", "pi1", "pi2", "inf"]
)


def is_reserved(name: str) -> bool:
    return name in KEYWORDS or name in A.BASE_TYPES or name == "_" or A.is_primitive_name(name)


class Token:
    __slots__ = ("kind", "text", "span")

    def __init__(self, kind, text, span):
        self.kind = kind
        self.text = text
        self.span = span

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.span})"


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", Span(line, pos - line_start + 1))
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "sym" and text == "λ":
                text = "\\"
            tokens.append(Token(kind, text, Span(line, pos - line_start + 1)))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1)))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.span)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or is_reserved(t.text):
            self.fail("expected a variable name")
        self.advance()
        return t.text

    def finish(self):
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")

    # -- terms

    def expr(self) -> A.Term:
        t = self.tok
        sp = t.span
        if self.at("\\"):
            self.advance()
            self.expect("(")
            x = self.ident()
            self.expect(":")
            ty = self.type_()
            self.expect(")")
            self.expect(".")
            return A.Lam(x, ty, self.expr(), span=sp)
        if self.at("bind"):
            self.advance()
            x = self.ident()
            self.expect("<-")
            e1 = self.expr()
            self.expect(";")
            return A.Bind(x, e1, self.expr(), span=sp)
        if self.at("let"):
            self.advance()
            if self.at("!"):
                self.advance()
                x = self.ident()
                self.expect("=")
                e1 = self.expr()
                self.expect("in")
                return A.LetBang(x, e1, self.expr(), span=sp)
            if self.at("("):
                self.advance()
                x = self.ident()
                self.expect(",")
                y = self.ident()
                self.expect(")")
                self.expect("=")
                e1 = self.expr()
                self.expect("in")
                return A.LetTensor(x, y, e1, self.expr(), span=sp)
            self.fail("expected '!' or '(' after 'let'")
        if self.at("case"):
            self.advance()
            scrut = self.expr()
            self.expect("of")
            self.expect("inl")
            x = self.ident()
            self.expect(".")
            el = self.expr()
            self.expect("|")
            self.expect("inr")
            y = self.ident()
            self.expect(".")
            return A.Case(scrut, x, el, y, self.expr(), span=sp)
        if self.at("return"):
            self.advance()
            self.expect("[")
            d = self.divergence()
            self.expect("]")
            return A.Return(d, self.expr(), span=sp)
        return self.sum_expr()

    def sum_expr(self) -> A.Term:
        left = self.app_expr()
        while self.at("+"):
            sp = self.advance().span
            left = A.Add(left, self.app_expr(), span=sp)
        return left

    def _starts_prefixed(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS or t.text in ("pi1", "pi2", "inl", "inr")
        return t.kind == "sym" and t.text in ("(", "<", "!")

    def app_expr(self) -> A.Term:
        fn = self.prefixed()
        while self._starts_prefixed():
            sp = self.tok.span
            fn = A.App(fn, self.prefixed(), span=sp)
        return fn

    def prefixed(self) -> A.Term:
        t = self.tok
        sp = t.span
        if t.kind == "ident" and t.text in ("pi1", "pi2"):
            self.advance()
            return A.Proj(1 if t.text == "pi1" else 2, self.prefixed(), span=sp)
        if t.kind == "ident" and t.text in ("inl", "inr"):
            self.advance()
            node = A.Inl if t.text == "inl" else A.Inr
            return node(self.prefixed(), span=sp)
        if self.at("!"):
            self.advance()
            scale = ExtReal(1)
            if self.at("{"):
                self.advance()
                scale = self.extreal()
                if scale == 0:
                    raise ParseError("!-annotation must be positive", sp)
                self.expect("}")
            return A.BangIntro(scale, self.prefixed(), span=sp)
        return self.atom()

    def atom(self) -> A.Term:
        t = self.tok
        sp = t.span
        if t.kind == "num":
            self.advance()
            if "/" in t.text:
                raise ParseError("real constants must be decimal literals", sp)
            return A.RealConst(Decimal(t.text), span=sp)
        if t.kind == "ident" and A.is_primitive_name(t.text):
            self.advance()
            args = ()
            if self.at("["):
                self.advance()
                args = self.static_args()
                self.expect("]")
            return A.Prim(t.text, args, span=sp)
        if t.kind == "ident" and not is_reserved(t.text):
            self.advance()
            return A.Var(t.text, span=sp)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return A.UnitVal(span=sp)
            e = self.expr()
            if self.at(","):
                self.advance()
                e2 = self.expr()
                self.expect(")")
                return A.TensorPair(e, e2, span=sp)
            self.expect(")")
            return e
        if self.at("<"):
            self.advance()
            e1 = self.expr()
            self.expect(",")
            e2 = self.expr()
            self.expect(">")
            return A.WithPair(e1, e2, span=sp)
        self.fail("expected an expression")

    def static_args(self) -> tuple:
        args = [self.static_arg()]
        while self.at(","):
            self.advance()
            args.append(self.static_arg())
        return tuple(args)

    def static_arg(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return parse_rational(t.text)
        if t.kind == "ident":
            self.advance()
            return t.text
        self.fail("expected a number or a name")

    def extreal(self) -> ExtReal:
        t = self.tok
        if t.kind == "ident" and t.text == "inf":
            self.advance()
            return ExtReal("inf")
        if t.kind == "num":
            self.advance()
            try:
                return ExtReal(parse_rational(t.text))
            except ValueError as exc:
                raise ParseError(str(exc), t.span) from None
        self.fail("expected a scale factor")

    def number(self) -> float:
        t = self.tok
        if t.kind == "ident" and t.text == "inf":
            self.advance()
            return float("inf")
        if t.kind != "num":
            self.fail("expected a number")
        self.advance()
        return float(parse_rational(t.text)) if "/" in t.text else float(t.text)

    def divergence(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text not in A.DIVERGENCES:
            self.fail("expected a divergence (MD, SD, ED, KL, XD, HD)")
        self.advance()
        return t.text

    # -- types

    def type_(self) -> A.Type:
        dom = self.sum_type()
        if self.at("-o"):
            self.advance()
            return A.Lolli(dom, self.type_())
        return dom

    def sum_type(self) -> A.Type:
        left = self.prod_type()
        while self.at("+"):
            self.advance()
            left = A.Sum(left, self.prod_type())
        return left

    def prod_type(self) -> A.Type:
        left = self.unary_type()
        while self.at("*") or self.at("&"):
            op = self.advance().text
            right = self.unary_type()
            left = A.Tensor(left, right) if op == "*" else A.With(left, right)
        return left

    def unary_type(self) -> A.Type:
        t = self.tok
        if self.at("!"):
            self.advance()
            self.expect("{")
            r = self.extreal()
            self.expect("}")
            if r == 0:
                raise ParseError("!-annotation must be positive", t.span)
            return A.Bang(r, self.unary_type())
        if t.kind == "ident" and t.text == "O" and self.peek().text == "[":
            self.advance()
            self.expect("[")
            d = self.divergence()
            grade = self.grade_for(d)
            self.expect("]")
            try:
                return A.Monad(d, grade, self.unary_type())
            except ValueError as exc:
                raise ParseError(str(exc), t.span) from None
        return self.atomic_type()

    def grade_for(self, d: str) -> Grade:
        if d in (A.MD, A.SD):
            return Grade.unit()
        try:
            if d == A.ED:
                self.expect("(")
                eps = self.number()
                self.expect(",")
                delta = self.number()
                self.expect(")")
                return Grade.ed(eps, delta)
            return Grade(A.DIV_MONOID[d], (self.number(),))
        except ValueError as exc:
            raise ParseError(str(exc), self.tok.span) from None

    def atomic_type(self) -> A.Type:
        t = self.tok
        if t.kind == "ident" and t.text in A.BASE_TYPES:
            self.advance()
            return A.Base(t.text)
        if t.kind == "ident" and t.text == "_":
            self.advance()
            return A.Hole()
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        self.fail("expected a type")


def parse_term(source: str) -> A.Term:
    p = Parser(source)
    t = p.expr()
    p.finish()
    return t


def parse_type(source: str) -> A.Type:
    p = Parser(source)
    t = p.type_()
    p.finish()
    return t


def parse(source: str):
    """Parse a term, falling back to a type when the text is not a term."""
    try:
        return parse_term(source)
    except ParseError as term_err:
        try:
            return parse_type(source)
        except ParseError:
            raise term_err from None

