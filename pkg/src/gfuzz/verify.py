"""Privacy-bound certification over small database universes.

A program of type ``!{r} Db -o O[D g] T`` is run on every pair of databases at
Hamming distance ``h``; the pair sits at distance ``k = r*h`` in the domain
metric.  Graded monads are read through the path metric of their relation, so
``floor(k)`` hops of the grade are allowed: for ED that is the group-privacy
unfolding, for HD the triangle inequality gives ``floor(k)*alpha``.
"""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Any, Mapping

from .dist import Grid, bernoulli, gaussian_grid, laplace_grid, poisson_trunc
from .divergence import chi2_div, hellinger, kl_div, max_div, skew_div, stat_dist
from .errors import EnumerationTooLarge, TypeShapeMismatch
from .interp import Banged, Database, EvalConfig, Evaluator, freeze_record, make_predicate
from .lang import ast as A
from .lang.parser import parse_term
from .lang.printer import pretty_type
from .numerics import ExtReal, Grade
from .typecheck import infer

TOL = 1e-9
MAX_DATABASES = 5_000


@dataclass(frozen=True)
class DbUniverse:
    records: tuple
    max_db_size: int
    predicates: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)
    raw: Mapping = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        frozen = tuple(freeze_record(r) for r in self.records)
        if len(set(frozen)) != len(frozen):
            raise ValueError("universe records must be distinct")
        if self.max_db_size < 1:
            raise ValueError("max_db_size must be >= 1")
        object.__setattr__(self, "records", frozen)

    @classmethod
    def from_json(cls, data) -> "DbUniverse":
        if isinstance(data, list):
            data = {"records": data}
        records = data["records"]
        preds = {name: make_predicate(p) for name, p in data.get("predicates", {}).items()}
        return cls(tuple(records), int(data.get("max_db_size", len(records))), preds, data)

    @classmethod
    def load(cls, path) -> "DbUniverse":
        return cls.from_json(json.loads(Path(path).read_text()))


def all_databases(u: DbUniverse) -> list[Database]:
    out = []
    for size in range(u.max_db_size + 1):
        for combo in combinations_with_replacement(u.records, size):
            out.append(Database.of(combo))
            if len(out) > MAX_DATABASES:
                raise EnumerationTooLarge(f"more than {MAX_DATABASES} databases in the universe")
    return out


def hamming(a: Database, b: Database) -> int:
    ca, cb = Counter(a.records), Counter(b.records)
    return sum(((ca - cb) + (cb - ca)).values())


def enumerate_adjacent(u: DbUniverse, k: int, cap: int = 200_000) -> list[tuple[Database, Database]]:
    """Unordered database pairs whose multiset symmetric difference is exactly ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dbs = all_databases(u)
    if len(dbs) * (len(dbs) - 1) // 2 > cap:
        raise EnumerationTooLarge(f"{len(dbs)} databases give too many candidate pairs (cap {cap})")
    return [(a, b) for i, a in enumerate(dbs) for b in dbs[i + 1:] if hamming(a, b) == k]


def group_privacy_unfold(k: int, eps: float, delta: float) -> Grade:
    """(k*eps, delta * sum_{i<k} e^(i*eps)), built by the one-step iteration."""
    if k < 1:
        raise ValueError("k must be >= 1")
    e, d = eps, delta
    for _ in range(k - 1):
        e, d = e + eps, delta + math.exp(eps) * d
    return Grade.ed(e, d)


# -- verification --------------------------------------------------------------

@dataclass
class PairResult:
    left: str
    right: str
    measured: float


@dataclass
class VerifyReport:
    program: str
    type: str
    divergence: str
    claimed: str
    k: str
    hamming: int
    bound: float
    eps: float | None
    pairs: list[PairResult]
    max_measured: float
    passed: bool
    pair_count: int
    runtime: float
    grid: str | None
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "program": self.program, "type": self.type, "divergence": self.divergence,
            "claimed": self.claimed, "k": self.k, "hamming": self.hamming,
            "bound": self.bound, "eps": self.eps, "max_measured": self.max_measured,
            "passed": self.passed, "pair_count": self.pair_count, "runtime": self.runtime,
            "grid": self.grid, "tolerance": self.tolerance,
            "pairs": [{"left": p.left, "right": p.right, "measured": p.measured} for p in self.pairs],
        }


def _describe_db(db: Database) -> str:
    return "{" + "; ".join(",".join(f"{k}={v}" for k, v in r) if isinstance(r, tuple) else str(r)
                           for r in db.records) + "}"


def _domain_scale(dom: A.Type) -> ExtReal:
    if dom == A.DB:
        return ExtReal(1)
    if isinstance(dom, A.Bang) and dom.body == A.DB:
        return dom.scale
    raise TypeShapeMismatch(f"domain {pretty_type(dom)} is not Db or !{{r}} Db")


@dataclass
class _Plan:
    divergence: str
    claimed: str
    bound: float
    eps: float | None
    measure: Any


def _plan(cod: A.Type, k: Fraction) -> _Plan:
    hops = math.floor(k)
    if isinstance(cod, A.Monad):
        g, d = cod.grade, cod.div
        if d in (A.MD, A.SD):
            f = max_div if d == A.MD else stat_dist
            return _Plan(d, f"{d} <= {k}", float(k), None, f)
        if d == A.ED:
            if hops == 0:
                return _Plan(d, str(g), 0.0, 0.0, lambda a, b: stat_dist(a, b))
            gp = group_privacy_unfold(hops, g.eps, g.delta)
            return _Plan(d, str(gp), gp.delta, gp.eps, lambda a, b: skew_div(gp.eps, a, b))
        if d == A.HD:
            return _Plan(d, f"{hops} x {g}", hops * g.alpha, None, hellinger)
        if hops > 1:
            raise TypeShapeMismatch(f"{d} has no triangle inequality; only distance <= 1 is verifiable")
        f = kl_div if d == A.KL else chi2_div
        bound = g.alpha if hops == 1 else 0.0
        return _Plan(d, str(g), bound, None, lambda a, b: max(f(a, b), f(b, a)))
    if cod in (A.REAL, A.CEIL, A.NAT):
        ceil = cod == A.CEIL

        def gap(a, b):
            diff = abs(float(a) - float(b))
            return float(math.ceil(diff)) if ceil else diff

        return _Plan("sensitivity", f"|f x - f y| <= {k}", float(k), None, gap)
    if cod in (A.BOOL, A.UNIT_T):
        return _Plan("sensitivity", "discrete output", float(k), None, lambda a, b: 0.0 if a == b else math.inf)
    raise TypeShapeMismatch(f"result type {pretty_type(cod)} is not verifiable")


def _eval_outputs(source: str, universe_raw, grid_text, dbs):
    term = parse_term(source)
    u = DbUniverse.from_json(universe_raw)
    grid = Grid.parse(grid_text) if grid_text else None
    ev = Evaluator(EvalConfig(grid=grid, predicates=u.predicates))
    prog = ev.eval({}, term)
    return [ev.apply(prog, _arg(db, term_dom)) for db, term_dom in dbs]


def _arg(db: Database, dom: A.Type):
    return Banged(db) if isinstance(dom, A.Bang) else db


def verify_bound(program: str, universe: DbUniverse, k=None, grid: Grid | None = None,
                 tol: float = TOL, jobs: int = 1, program_id: str = "<program>") -> VerifyReport:
    start = time.perf_counter()
    term = parse_term(program)
    j = infer({}, term)
    if not isinstance(j.type, A.Lolli):
        raise TypeShapeMismatch(f"{pretty_type(j.type)} is not a function of a database")
    r = _domain_scale(j.type.dom)
    if r.is_inf:
        raise TypeShapeMismatch("!{inf} Db gives no finite guarantee for distinct databases")
    k = Fraction(r.finite) if k is None else Fraction(str(k))
    h = k / r.finite
    if h.denominator != 1 or h < 1:
        raise TypeShapeMismatch(f"k = {k} is not a positive multiple of the domain scale {r}")
    plan = _plan(j.type.cod, k)
    pairs = enumerate_adjacent(universe, int(h))
    dbs = sorted({db for p in pairs for db in p}, key=lambda d: (len(d), repr(d.records)))
    dom = j.type.dom
    if jobs > 1 and len(dbs) > 1:
        chunks = [dbs[i::jobs] for i in range(jobs)]
        args = [(program, universe.raw, str(grid) if grid else None, [(d, dom) for d in c]) for c in chunks]
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_eval_outputs, *zip(*args)))
        outputs = {db: out for c, res in zip(chunks, results) for db, out in zip(c, res)}
    else:
        ev = Evaluator(EvalConfig(grid=grid, predicates=universe.predicates))
        prog = ev.eval({}, term)
        outputs = {db: ev.apply(prog, _arg(db, dom)) for db in dbs}
    results = []
    for a, b in pairs:
        results.append(PairResult(_describe_db(a), _describe_db(b), plan.measure(outputs[a], outputs[b])))
    worst = max((p.measured for p in results), default=0.0)
    return VerifyReport(
        program=program_id, type=pretty_type(j.type), divergence=plan.divergence, claimed=plan.claimed,
        k=str(k), hamming=int(h), bound=plan.bound, eps=plan.eps, pairs=results, max_measured=worst,
        passed=worst <= plan.bound + tol, pair_count=len(results),
        runtime=time.perf_counter() - start, grid=str(grid) if grid else None, tolerance=tol)


# -- mechanism bounds ----------------------------------------------------------

@dataclass
class MechanismCheck:
    mechanism: str
    relation: str
    rows: list[dict]
    tolerance: float

    @property
    def worst_excess(self) -> float:
        return max((r["measured"] - r["bound"] for r in self.rows), default=-math.inf)

    @property
    def passed(self) -> bool:
        return all(r["ok"] for r in self.rows)

    def to_dict(self) -> dict:
        return {"mechanism": self.mechanism, "relation": self.relation, "tolerance": self.tolerance,
                "passed": self.passed, "worst_excess": self.worst_excess, "rows": self.rows}


def _row(a, b, measured, bound, ok):
    return {"a": a, "b": b, "measured": measured, "bound": bound, "ok": bool(ok)}


def parameter_pairs(lo: float, hi: float, n: int) -> list[tuple[float, float]]:
    """``n`` pairs (x, x + t) with x spread over [lo, hi] and t in (0, 1]."""
    out = []
    for i in range(n):
        x = lo + (hi - lo) * i / max(n - 1, 1)
        t = (i % 5 + 1) / 5
        out.append((round(x, 6), round(x + t, 6)))
    return out


def check_laplace(grid: Grid, b: float = 1.0, n: int = 25, tol: float = 1e-9) -> MechanismCheck:
    rows = []
    for m1, m2 in parameter_pairs(-3, 3, n):
        md = max_div(laplace_grid(m1, b, grid), laplace_grid(m2, b, grid))
        bound = abs(m1 - m2) / b
        rows.append(_row(m1, m2, md, bound, md <= bound + tol))
    return MechanismCheck("Laplace", "MD <= |mu - mu'| / b", rows, tol)


def check_bernoulli(n: int = 25, tol: float = 1e-12) -> MechanismCheck:
    rows = []
    for i in range(n):
        p = Fraction(i, n)
        q = min(p + Fraction((i % 4) + 1, 8), Fraction(1))
        sd = stat_dist(bernoulli(p), bernoulli(q))
        bound = float(abs(p - q))
        rows.append(_row(float(p), float(q), sd, bound, abs(sd - bound) <= tol))
    return MechanismCheck("Bernoulli", "SD = |p - p'|", rows, tol)


def check_normal(grid: Grid, n: int = 25, tol: float = 1e-6) -> MechanismCheck:
    rows = []
    for m1, m2 in parameter_pairs(-2, 2, n):
        kl = kl_div(gaussian_grid(m1, 1.0, grid), gaussian_grid(m2, 1.0, grid))
        bound = (m1 - m2) ** 2
        rows.append(_row(m1, m2, kl, bound, kl <= bound + tol))
    return MechanismCheck("Normal", "KL <= (mu1 - mu2)^2", rows, tol)


def check_poisson(n: int = 25, tol: float = 1e-6, squared: bool = False) -> MechanismCheck:
    rows = []
    for a1, a2 in parameter_pairs(0, 8, n):
        h = hellinger(poisson_trunc(a1), poisson_trunc(a2))
        measured = h * h if squared else h
        bound = 0.5 * (math.sqrt(a1) - math.sqrt(a2)) ** 2
        rows.append(_row(a1, a2, measured, bound, measured <= bound + tol))
    name = "HD^2 <= |sqrt a - sqrt a'|^2 / 2" if squared else "HD <= |sqrt a - sqrt a'|^2 / 2"
    return MechanismCheck("Poisson", name, rows, tol)


def check_mechanisms(grid: Grid | None = None, n: int = 25) -> list[MechanismCheck]:
    grid = grid or Grid(Decimal(-12), Decimal(12), Decimal("0.05"))
    return [check_laplace(grid, n=n), check_bernoulli(n=n), check_normal(grid, n=n),
            check_poisson(n=n), check_poisson(n=n, squared=True)]
