"""Call-by-value evaluator with exact finite distribution semantics.

Runtime values: ``Decimal`` (Real, CeilReal), ``int`` (Nat), ``bool``,
``UNIT``, ``TensorV``, ``WithV``, ``Tagged``, ``Banged``, ``Database``,
``Closure``/``PrimV`` for functions, and ``Dist`` for monadic results.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Any, Callable, Mapping

from .dist import EXACT, FLOAT, Dist, Grid, bernoulli, default_grid, dirac, gaussian_grid, laplace_grid, poisson_trunc
from .errors import GFuzzError, RuntimeTypeError
from .lang import ast as A
from .lang.parser import parse_term
from .typecheck import Judgment, gaussian_scale, infer

UNIT = ()


@dataclass(frozen=True)
class TensorV:
    left: Any
    right: Any


@dataclass(frozen=True)
class WithV:
    left: Any
    right: Any


@dataclass(frozen=True)
class Tagged:
    tag: str  # "inl" or "inr"
    value: Any


@dataclass(frozen=True)
class Banged:
    value: Any


@dataclass(frozen=True)
class Database:
    """Multiset of records, stored as a sorted tuple of hashable records."""

    records: tuple = ()

    @classmethod
    def of(cls, records) -> "Database":
        return cls(tuple(sorted((freeze_record(r) for r in records), key=repr)))

    def __len__(self):
        return len(self.records)


def freeze_record(r):
    if isinstance(r, dict):
        return tuple(sorted((k, freeze_record(v)) for k, v in r.items()))
    if isinstance(r, list):
        return tuple(freeze_record(v) for v in r)
    return r


@dataclass(frozen=True, eq=False)
class Closure:
    param: str
    body: A.Term
    env: Mapping[str, Any]


@dataclass(frozen=True)
class PrimV:
    name: str
    args: tuple
    collected: tuple = ()


# -- predicates ----------------------------------------------------------------

_OPS = {">=": operator.ge, ">": operator.gt, "<=": operator.le, "<": operator.lt,
        "==": operator.eq, "!=": operator.ne}


def make_predicate(spec: Mapping) -> Callable:
    """``{"field": "age", "op": ">=", "value": 18}`` -> record predicate."""
    fld, op, value = spec["field"], spec.get("op", "=="), spec["value"]
    if op not in _OPS:
        raise ValueError(f"unknown comparison {op!r}")
    cmp = _OPS[op]

    def pred(record) -> bool:
        fields = dict(record)
        return fld in fields and cmp(fields[fld], value)

    return pred


@dataclass
class EvalConfig:
    grid: Grid | None = None
    predicates: Mapping[str, Callable] = field(default_factory=dict)
    default_step: Decimal = Decimal("0.05")
    _cache: dict = field(default_factory=dict, repr=False)


# -- evaluation ----------------------------------------------------------------

class Evaluator:
    def __init__(self, config: EvalConfig | None = None):
        self.config = config or EvalConfig()

    def eval(self, env: Mapping[str, Any], e: A.Term):
        m = getattr(self, "_" + type(e).__name__)
        return m(env, e)

    def _Var(self, env, e):
        try:
            return env[e.name]
        except KeyError:
            raise RuntimeTypeError(f"unbound variable {e.name!r} at run time", e.span) from None

    def _RealConst(self, env, e):
        return e.value

    def _UnitVal(self, env, e):
        return UNIT

    def _Add(self, env, e):
        a, b = self.eval(env, e.left), self.eval(env, e.right)
        if not isinstance(a, Decimal) or not isinstance(b, Decimal):
            raise RuntimeTypeError("'+' applied to non-reals", e.span)
        return a + b

    def _Lam(self, env, e):
        fv = A.free_vars(e)
        return Closure(e.param, e.body, {k: v for k, v in env.items() if k in fv})

    def _App(self, env, e):
        return self.apply(self.eval(env, e.fn), self.eval(env, e.arg), e)

    def _TensorPair(self, env, e):
        return TensorV(self.eval(env, e.left), self.eval(env, e.right))

    def _WithPair(self, env, e):
        return WithV(self.eval(env, e.left), self.eval(env, e.right))

    def _LetTensor(self, env, e):
        v = self.eval(env, e.bound)
        if not isinstance(v, TensorV):
            raise RuntimeTypeError("let-pair on a non-pair", e.span)
        return self.eval({**env, e.x: v.left, e.y: v.right}, e.body)

    def _Proj(self, env, e):
        v = self.eval(env, e.body)
        if not isinstance(v, WithV):
            raise RuntimeTypeError("projection from a non-pair", e.span)
        return v.left if e.index == 1 else v.right

    def _BangIntro(self, env, e):
        return Banged(self.eval(env, e.body))

    def _LetBang(self, env, e):
        v = self.eval(env, e.bound)
        if not isinstance(v, Banged):
            raise RuntimeTypeError("let ! on an unboxed value", e.span)
        return self.eval({**env, e.x: v.value}, e.body)

    def _Inl(self, env, e):
        return Tagged("inl", self.eval(env, e.body))

    def _Inr(self, env, e):
        return Tagged("inr", self.eval(env, e.body))

    def _Case(self, env, e):
        v = self.eval(env, e.scrutinee)
        if not isinstance(v, Tagged):
            raise RuntimeTypeError("case on a non-sum", e.span)
        if v.tag == "inl":
            return self.eval({**env, e.lvar: v.value}, e.lbody)
        return self.eval({**env, e.rvar: v.value}, e.rbody)

    def _Return(self, env, e):
        return dirac(self.eval(env, e.body))

    def _Bind(self, env, e):
        out: dict = {}
        self._scatter(env, e, Fraction(1), out)
        if all(isinstance(q, Fraction) for q in out.values()):
            return Dist._trusted({v: q for v, q in out.items() if q}, EXACT)
        return Dist({v: float(q) for v, q in out.items() if q}, FLOAT)

    def _scatter(self, env, e, weight, out: dict):
        """Add ``weight`` times the distribution of ``e`` into ``out``."""
        if isinstance(e, A.Bind):
            mu = self.eval(env, e.bound)
            if not isinstance(mu, Dist):
                raise RuntimeTypeError("bind on a non-distribution", e.span)
            for v, p in mu.items():
                self._scatter({**env, e.x: v}, e.body, weight * p, out)
            return
        if isinstance(e, A.Return):
            v = self.eval(env, e.body)
            out[v] = out.get(v, 0) + weight
            return
        d = self.eval(env, e)
        if not isinstance(d, Dist):
            raise RuntimeTypeError("monadic position holds a non-distribution", e.span)
        for v, q in d.items():
            out[v] = out.get(v, 0) + weight * q

    def _Prim(self, env, e):
        return PrimV(e.name, e.args)

    # -- application

    def apply(self, f, arg, where: A.Term | None = None):
        span = where.span if where is not None else None
        if isinstance(f, Closure):
            return self.eval({**f.env, f.param: arg}, f.body)
        if isinstance(f, PrimV):
            return self.apply_prim(f, arg, span)
        raise RuntimeTypeError("application of a non-function", span)

    def apply_prim(self, f: PrimV, arg, span=None):
        n_iter = A.ac_iterations(f.name)
        if n_iter is not None:
            collected = f.collected + (arg,)
            if len(collected) < 3:
                return PrimV(f.name, f.args, collected)
            step, init, db = collected
            return self.advanced_composition(n_iter, _unbang(step), _unbang(init), db, span)
        key = (f.name, f.args, arg)
        cache = self.config._cache
        if key in cache:
            return cache[key]
        out = self._prim(f.name, f.args, arg, span)
        if isinstance(out, Dist):
            cache[key] = out
        return out

    def advanced_composition(self, n: int, step, state, db, span):
        dist = dirac(state)
        for _ in range(n):
            dist = self._kleisli(dist, lambda s: self.apply(self.apply(step, Banged(s)), db), span)
        return dist

    def _kleisli(self, mu: Dist, k, span):
        out: dict = {}
        for v, p in mu.items():
            d = k(v)
            if not isinstance(d, Dist):
                raise RuntimeTypeError("iterated step did not return a distribution", span)
            for y, q in d.items():
                out[y] = out.get(y, 0) + p * q
        if all(isinstance(q, Fraction) for q in out.values()):
            return Dist._trusted({v: q for v, q in out.items() if q}, EXACT)
        return Dist({v: float(q) for v, q in out.items() if q}, FLOAT)

    def _grid_for(self, mu: float, scale: float) -> Grid:
        return self.config.grid or default_grid(mu, scale, self.config.default_step)

    def _prim(self, name, args, arg, span):
        if name == "Laplace":
            x = _real(_unbang(arg), span)
            b = 1 / float(args[0])
            return laplace_grid(float(x), b, self._grid_for(float(x), b))
        if name == "Gaussian":
            x = _real(arg, span)
            sigma = gaussian_scale(float(args[0]), float(args[1]))
            return gaussian_grid(float(x), sigma, self._grid_for(float(x), sigma))
        if name == "Normal":
            x = _real(arg, span)
            return gaussian_grid(float(x), 1.0, self._grid_for(float(x), 1.0))
        if name == "Poisson":
            x = _real(arg, span)
            if x < 0:
                raise RuntimeTypeError(f"Poisson rate {x} is negative", span)
            return poisson_trunc(float(x))
        if name == "Bernoulli":
            return bernoulli(_real(arg, span))
        if name == "size":
            return Decimal(len(_db(arg, span)))
        if name == "count":
            pred = self.config.predicates.get(args[0])
            if pred is None:
                raise RuntimeTypeError(f"no predicate named {args[0]!r}", span)
            return Decimal(sum(1 for r in _db(arg, span).records if pred(r)))
        if name == "to_real":
            return _real(arg, span)
        if name == "add_ceil":
            if not isinstance(arg, TensorV):
                raise RuntimeTypeError("add_ceil expects a pair", span)
            return _real(arg.left, span) + _real(arg.right, span)
        raise RuntimeTypeError(f"unknown primitive {name!r}", span)


def _unbang(v):
    return v.value if isinstance(v, Banged) else v


def _real(v, span) -> Decimal:
    if isinstance(v, Decimal):
        return v
    raise RuntimeTypeError(f"expected a real number, got {format_value(v)}", span)


def _db(v, span) -> Database:
    if isinstance(v, Database):
        return v
    raise RuntimeTypeError("expected a database", span)


def evaluate(env: Mapping[str, Any], e: A.Term, config: EvalConfig | None = None):
    return Evaluator(config).eval(env, e)


# -- inputs and outputs --------------------------------------------------------

def value_from_json(t: A.Type, raw):
    """Convert a JSON input to a runtime value of type ``t``."""
    if isinstance(t, A.Bang):
        return Banged(value_from_json(t.body, raw))
    if t == A.DB:
        records = raw.get("records", raw) if isinstance(raw, dict) else raw
        return Database.of(records)
    if t in (A.REAL, A.CEIL):
        return Decimal(str(raw))
    if t == A.NAT:
        return int(raw)
    if t == A.BOOL:
        return bool(raw)
    if t == A.UNIT_T:
        return UNIT
    if isinstance(t, (A.Tensor, A.With)) and isinstance(raw, list) and len(raw) == 2:
        ctor = TensorV if isinstance(t, A.Tensor) else WithV
        return ctor(value_from_json(t.left, raw[0]), value_from_json(t.right, raw[1]))
    raise RuntimeTypeError(f"cannot build a {t} input from {json.dumps(raw)}")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Decimal):
        return format(v.normalize(), "f")
    if isinstance(v, int):
        return str(v)
    if v == UNIT:
        return "()"
    if isinstance(v, TensorV):
        return f"({format_value(v.left)}, {format_value(v.right)})"
    if isinstance(v, WithV):
        return f"<{format_value(v.left)}, {format_value(v.right)}>"
    if isinstance(v, Tagged):
        return f"{v.tag} {format_value(v.value)}"
    if isinstance(v, Banged):
        return f"!{format_value(v.value)}"
    if isinstance(v, Database):
        return f"db[{len(v)}]"
    if isinstance(v, (Closure, PrimV)):
        return "<function>"
    if isinstance(v, Dist):
        return format_dist(v)
    return str(v)


def _sort_key(v):
    if isinstance(v, (Decimal, int, bool)):
        return (0, v, "")
    return (1, 0, format_value(v))


def format_dist(d: Dist) -> str:
    rows = sorted(d.items(), key=lambda kv: _sort_key(kv[0]))
    return "\n".join(f"{format_value(v)}\t{q if d.mode == EXACT else repr(float(q))}" for v, q in rows)


@dataclass
class RunResult:
    judgment: Judgment
    value: Any


def run_program(source: str | A.Term, inputs=(), config: EvalConfig | None = None) -> RunResult:
    """Parse, check and evaluate a closed program, then apply it to ``inputs``."""
    term = parse_term(source) if isinstance(source, str) else source
    judgment = infer({}, term)
    ev = Evaluator(config)
    value = ev.eval({}, term)
    t = judgment.type
    for raw in inputs:
        if not isinstance(t, A.Lolli):
            raise GFuzzError(f"program takes fewer than {len(inputs)} argument(s)")
        arg = raw if not _is_json(raw) else value_from_json(t.dom, raw)
        value = ev.apply(value, arg)
        t = t.cod
    return RunResult(Judgment(t, judgment.usage), value)


_RUNTIME = (Decimal, Database, Banged, TensorV, WithV, Tagged, Closure, PrimV, Dist)


def _is_json(raw) -> bool:
    return not isinstance(raw, _RUNTIME)
