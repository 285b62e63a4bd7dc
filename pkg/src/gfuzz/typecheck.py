"""Bottom-up sensitivity synthesis for graded Fuzz.

``infer`` computes, for a term and the declared types of its free variables,
the principal type together with the least usage map under which the term
type-checks.  Context splitting in the declarative rules becomes ``add_ctx``
(for tensor-like premises) or ``max_ctx`` (for shared-context premises).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import (
    InvalidStaticArg, MonoidMismatch, SensitivityExceeded, SubsumptionFailure,
    TypeMismatch, UnboundVariable, UnknownPrimitive,
)
from .lang import ast as A
from .lang.context import add_ctx, drop, max_ctx, scale_ctx
from .lang.printer import pretty_type
from .numerics import INF, ONE, ZERO, ExtReal, Grade, grade_compose, grade_join, grade_leq, unit_grade

TypeEnv = Mapping[str, A.Type]


@dataclass(frozen=True)
class Judgment:
    type: A.Type
    usage: Mapping = field(default_factory=dict)

    def __str__(self):
        return pretty_type(self.type)


# -- primitives ----------------------------------------------------------------

def gaussian_scale(eps: float, delta: float) -> float:
    """Noise scale s(eps, delta) = 2 ln(1.25/delta) / eps, used verbatim."""
    return 2.0 * math.log(1.25 / delta) / eps


def advanced_composition(n: int, eps: float, delta: float, delta_prime: float) -> tuple[float, float]:
    eps_star = eps * math.sqrt(2 * n * math.log(1 / delta_prime)) + n * eps * math.expm1(eps)
    return eps_star, n * delta + delta_prime


def _num(name, args, i, what):
    a = args[i]
    if isinstance(a, str):
        raise InvalidStaticArg(f"{name}: {what} must be a number, got {a!r}")
    return Fraction(a)


def _arity(name, args, k):
    if len(args) != k:
        raise InvalidStaticArg(f"{name} takes {k} static argument(s), got {len(args)}")


def _positive(name, value, what):
    if not value > 0:
        raise InvalidStaticArg(f"{name}: {what} must be > 0, got {value}")


def _unit_interval(name, value, what):
    if not 0 < value < 1:
        raise InvalidStaticArg(f"{name}: {what} must lie in (0, 1), got {value}")


def _ac_types(n, grade_in, grade_out, state):
    def step(g):
        return A.Lolli(A.Bang(INF, state), A.Lolli(A.DB, A.Monad(A.ED, g, state)))
    return A.Lolli(A.Bang(INF, step(grade_in)), step(grade_out))


def primitive_signature(name: str, args=(), state_type: A.Type = A.REAL) -> A.Type:
    args = tuple(args)
    n_iter = A.ac_iterations(name)
    if n_iter is not None:
        _arity(name, args, 3)
        eps, delta, dprime = (float(_num(name, args, i, w)) for i, w in enumerate(("eps", "delta", "delta'")))
        if n_iter < 1:
            raise InvalidStaticArg(f"{name}: iteration count must be >= 1")
        _positive(name, eps, "eps")
        _unit_interval(name, delta, "delta")
        _unit_interval(name, dprime, "delta'")
        eps_star, delta_star = advanced_composition(n_iter, eps, delta, dprime)
        return _ac_types(n_iter, Grade.ed(eps, delta), Grade.ed(eps_star, delta_star), state_type)
    if name == "Laplace":
        _arity(name, args, 1)
        eps = _num(name, args, 0, "eps")
        _positive(name, eps, "eps")
        return A.Lolli(A.Bang(eps, A.REAL), A.Monad(A.MD, Grade.unit(), A.REAL))
    if name == "Gaussian":
        _arity(name, args, 2)
        eps, delta = float(_num(name, args, 0, "eps")), float(_num(name, args, 1, "delta"))
        _positive(name, eps, "eps")
        _unit_interval(name, delta, "delta")
        return A.Lolli(A.CEIL, A.Monad(A.ED, Grade.ed(eps, delta), A.REAL))
    if name == "Bernoulli":
        _arity(name, args, 0)
        return A.Lolli(A.REAL, A.Monad(A.SD, Grade.unit(), A.BOOL))
    if name == "Normal":
        _arity(name, args, 0)
        return A.Lolli(A.CEIL, A.Monad(A.KL, Grade.kl(1.0), A.REAL))
    if name == "Poisson":
        _arity(name, args, 0)
        return A.Lolli(A.CEIL, A.Monad(A.HD, Grade.hd(0.5), A.NAT))
    if name == "size":
        _arity(name, args, 0)
        return A.Lolli(A.DB, A.CEIL)
    if name == "count":
        _arity(name, args, 1)
        if not isinstance(args[0], str):
            raise InvalidStaticArg("count: the predicate must be a name")
        return A.Lolli(A.DB, A.CEIL)
    if name == "to_real":
        _arity(name, args, 0)
        return A.Lolli(A.CEIL, A.REAL)
    if name == "add_ceil":
        _arity(name, args, 0)
        return A.Lolli(A.Tensor(A.CEIL, A.CEIL), A.CEIL)
    raise UnknownPrimitive(f"unknown primitive {name!r}")


# -- subtyping ---------------------------------------------------------------

def is_subtype(a: A.Type, b: A.Type) -> bool:
    if isinstance(a, A.Hole) or isinstance(b, A.Hole):
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, A.Base):
        return a == b
    if isinstance(a, A.Lolli):
        return is_subtype(b.dom, a.dom) and is_subtype(a.cod, b.cod)
    if isinstance(a, (A.Tensor, A.With, A.Sum)):
        return is_subtype(a.left, b.left) and is_subtype(a.right, b.right)
    if isinstance(a, A.Bang):
        return a.scale >= b.scale and is_subtype(a.body, b.body)
    if isinstance(a, A.Monad):
        return a.div == b.div and grade_leq(a.grade, b.grade) and is_subtype(a.body, b.body)
    return False


def _grade_meet(g, h):
    return Grade(g.monoid, tuple(min(x, y) for x, y in zip(g.values, h.values)))


def _lattice(a: A.Type, b: A.Type, upper: bool) -> A.Type:
    if isinstance(a, A.Hole):
        return b
    if isinstance(b, A.Hole):
        return a
    if type(a) is not type(b):
        raise TypeMismatch(f"incompatible types {pretty_type(a)} and {pretty_type(b)}")
    if isinstance(a, A.Base):
        if a != b:
            raise TypeMismatch(f"incompatible types {pretty_type(a)} and {pretty_type(b)}")
        return a
    if isinstance(a, A.Lolli):
        return A.Lolli(_lattice(a.dom, b.dom, not upper), _lattice(a.cod, b.cod, upper))
    if isinstance(a, (A.Tensor, A.With, A.Sum)):
        return type(a)(_lattice(a.left, b.left, upper), _lattice(a.right, b.right, upper))
    if isinstance(a, A.Bang):
        scale = min(a.scale, b.scale) if upper else max(a.scale, b.scale)
        return A.Bang(scale, _lattice(a.body, b.body, upper))
    if isinstance(a, A.Monad):
        if a.div != b.div:
            raise MonoidMismatch(f"cannot merge {a.div} and {b.div} monads")
        g = grade_join(a.grade, b.grade) if upper else _grade_meet(a.grade, b.grade)
        return A.Monad(a.div, g, _lattice(a.body, b.body, upper))
    raise TypeMismatch(f"incompatible types {pretty_type(a)} and {pretty_type(b)}")


def join_types(a: A.Type, b: A.Type) -> A.Type:
    return _lattice(a, b, True)


def subsume(j: Judgment, target: A.Type) -> Judgment:
    """Re-grade ``j`` to ``target``, which may differ only in monad grades."""
    failures = []

    def walk(s, t, covariant):
        if type(s) is not type(t):
            raise TypeMismatch(f"cannot subsume {pretty_type(j.type)} to {pretty_type(target)}")
        if isinstance(s, A.Base):
            if s != t:
                raise TypeMismatch(f"cannot subsume {pretty_type(j.type)} to {pretty_type(target)}")
        elif isinstance(s, A.Lolli):
            walk(s.dom, t.dom, not covariant)
            walk(s.cod, t.cod, covariant)
        elif isinstance(s, (A.Tensor, A.With, A.Sum)):
            walk(s.left, t.left, covariant)
            walk(s.right, t.right, covariant)
        elif isinstance(s, A.Bang):
            if s.scale != t.scale:
                raise TypeMismatch(f"cannot subsume {pretty_type(j.type)} to {pretty_type(target)}")
            walk(s.body, t.body, covariant)
        elif isinstance(s, A.Monad):
            if s.div != t.div:
                raise MonoidMismatch(f"cannot subsume a {s.div} monad to {t.div}")
            lo, hi = (s.grade, t.grade) if covariant else (t.grade, s.grade)
            if not grade_leq(lo, hi):
                failures.append((lo, hi))
            walk(s.body, t.body, covariant)

    walk(j.type, target, True)
    if failures:
        detail = ", ".join(f"{lo} > {hi}" for lo, hi in failures)
        raise SubsumptionFailure(f"grade subsumption fails: {detail}", failures)
    return Judgment(target, j.usage)


# -- inference -----------------------------------------------------------------

def _expect(t: A.Type, cls, what: str, term: A.Term):
    if not isinstance(t, cls):
        raise TypeMismatch(f"{what} expected, got {pretty_type(t)}", term.span)
    return t


def _letbang_factor(used: ExtReal, r: ExtReal) -> ExtReal:
    # least s with r * s >= used; with r = inf any positive s works, pick 1
    if used == ZERO:
        return ZERO
    if r.is_inf:
        return ONE
    if used.is_inf:
        return INF
    return ExtReal(used.finite / r.finite)


def infer(env: TypeEnv, e: A.Term) -> Judgment:
    if isinstance(e, A.Var):
        if e.name not in env:
            raise UnboundVariable(f"unbound variable {e.name!r}", e.span)
        return Judgment(env[e.name], {e.name: ONE})

    if isinstance(e, A.RealConst):
        return Judgment(A.REAL, {})

    if isinstance(e, A.UnitVal):
        return Judgment(A.UNIT_T, {})

    if isinstance(e, A.Add):
        jl, jr = infer(env, e.left), infer(env, e.right)
        if jl.type == jr.type and jl.type in (A.REAL, A.CEIL):
            return Judgment(jl.type, add_ctx(jl.usage, jr.usage))
        raise TypeMismatch(
            f"'+' needs two Real or two CeilReal operands, got {pretty_type(jl.type)} and {pretty_type(jr.type)}",
            e.span)

    if isinstance(e, A.Lam):
        jb = infer({**env, e.param: e.ptype}, e.body)
        used = jb.usage.get(e.param, ZERO)
        if used > ONE:
            raise SensitivityExceeded(
                f"'{e.param}' is used with sensitivity {used} > 1; annotate it as !{{{used}}} "
                f"{pretty_type(e.ptype)} and unpack with let !", e.span)
        return Judgment(A.Lolli(e.ptype, jb.type), drop(jb.usage, e.param))

    if isinstance(e, A.App):
        jf = infer(env, e.fn)
        ja = infer(env, e.arg)
        ftype = jf.type
        if isinstance(e.fn, A.Prim) and A.ac_iterations(e.fn.name) is not None:
            ftype = primitive_signature(e.fn.name, e.fn.args, _ac_state_type(ja.type, e))
        lol = _expect(ftype, A.Lolli, "function", e.fn)
        if not is_subtype(ja.type, lol.dom):
            raise TypeMismatch(
                f"argument of type {pretty_type(ja.type)} does not fit parameter {pretty_type(lol.dom)}",
                e.arg.span or e.span)
        return Judgment(lol.cod, add_ctx(jf.usage, ja.usage))

    if isinstance(e, A.TensorPair):
        jl, jr = infer(env, e.left), infer(env, e.right)
        return Judgment(A.Tensor(jl.type, jr.type), add_ctx(jl.usage, jr.usage))

    if isinstance(e, A.WithPair):
        jl, jr = infer(env, e.left), infer(env, e.right)
        return Judgment(A.With(jl.type, jr.type), max_ctx(jl.usage, jr.usage))

    if isinstance(e, A.LetTensor):
        jb0 = infer(env, e.bound)
        ten = _expect(jb0.type, A.Tensor, "tensor pair", e.bound)
        jb = infer({**env, e.x: ten.left, e.y: ten.right}, e.body)
        r = max(jb.usage.get(e.x, ZERO), jb.usage.get(e.y, ZERO))
        return Judgment(jb.type, add_ctx(drop(jb.usage, e.x, e.y), scale_ctx(r, jb0.usage)))

    if isinstance(e, A.Proj):
        jw = infer(env, e.body)
        w = _expect(jw.type, A.With, "with-pair", e.body)
        return Judgment(w.left if e.index == 1 else w.right, jw.usage)

    if isinstance(e, A.BangIntro):
        jb = infer(env, e.body)
        return Judgment(A.Bang(e.scale, jb.type), scale_ctx(e.scale, jb.usage))

    if isinstance(e, A.LetBang):
        jb0 = infer(env, e.bound)
        bang = _expect(jb0.type, A.Bang, "!-type", e.bound)
        jb = infer({**env, e.x: bang.body}, e.body)
        s = _letbang_factor(jb.usage.get(e.x, ZERO), bang.scale)
        return Judgment(jb.type, add_ctx(drop(jb.usage, e.x), scale_ctx(s, jb0.usage)))

    if isinstance(e, A.Inl):
        jb = infer(env, e.body)
        return Judgment(A.Sum(jb.type, A.Hole()), jb.usage)

    if isinstance(e, A.Inr):
        jb = infer(env, e.body)
        return Judgment(A.Sum(A.Hole(), jb.type), jb.usage)

    if isinstance(e, A.Case):
        js = infer(env, e.scrutinee)
        sm = _expect(js.type, A.Sum, "sum", e.scrutinee)
        jl = infer({**env, e.lvar: sm.left}, e.lbody)
        jr = infer({**env, e.rvar: sm.right}, e.rbody)
        ty = join_types(jl.type, jr.type)
        r = max(jl.usage.get(e.lvar, ZERO), jr.usage.get(e.rvar, ZERO))
        branches = max_ctx(drop(jl.usage, e.lvar), drop(jr.usage, e.rvar))
        return Judgment(ty, add_ctx(branches, scale_ctx(r, js.usage)))

    if isinstance(e, A.Return):
        jb = infer(env, e.body)
        grade = unit_grade(A.DIV_MONOID[e.div])
        return Judgment(A.Monad(e.div, grade, jb.type), scale_ctx(INF, jb.usage))

    if isinstance(e, A.Bind):
        j1 = infer(env, e.bound)
        m1 = _expect(j1.type, A.Monad, "monadic computation", e.bound)
        j2 = infer({**env, e.x: m1.body}, e.body)
        m2 = _expect(j2.type, A.Monad, "monadic computation", e.body)
        if m1.div != m2.div:
            raise MonoidMismatch(f"cannot bind a {m1.div} computation into a {m2.div} one", e.span)
        grade = grade_compose(m1.grade, m2.grade)
        rest = drop(j2.usage, e.x)
        if m1.div in (A.MD, A.SD):
            # ungraded liftings compose additively (context split)
            usage = add_ctx(j1.usage, rest)
        else:
            usage = max_ctx(j1.usage, rest)
        return Judgment(A.Monad(m1.div, grade, m2.body), usage)

    if isinstance(e, A.Prim):
        try:
            return Judgment(primitive_signature(e.name, e.args), {})
        except (InvalidStaticArg, UnknownPrimitive) as exc:
            raise type(exc)(exc.message, e.span) from None

    raise TypeError(f"not a term: {e!r}")


def _ac_state_type(arg_type: A.Type, e: A.Term) -> A.Type:
    shape = "!{inf} (!{inf} T -o Db -o O[ED (eps, delta)] T)"
    t = arg_type
    if (isinstance(t, A.Bang) and isinstance(t.body, A.Lolli)
            and isinstance(t.body.dom, A.Bang)):
        return t.body.dom.body
    raise TypeMismatch(f"advanced composition expects {shape}, got {pretty_type(arg_type)}", e.span)


def check_program(source: str, env: TypeEnv | None = None) -> Judgment:
    from .lang.parser import parse_term
    return infer(env or {}, parse_term(source))
