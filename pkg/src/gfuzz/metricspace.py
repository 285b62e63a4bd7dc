"""Finite relations, finite extended pseudo-metric spaces and the path/at-most-one functors."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .errors import CarrierTooLarge, MetricViolation
from .numerics import INF, ZERO, ExtReal

LOLLI_CARRIER_CAP = 5
ENUMERATION_CAP = 5 ** 5


def _pair(x, y) -> frozenset:
    return frozenset((x, y))


class FinRel:
    """Reflexive symmetric relation; the diagonal is always included."""

    def __init__(self, carrier: Sequence[Hashable], edges: Iterable[tuple] = ()):
        self.carrier = tuple(carrier)
        if len(set(self.carrier)) != len(self.carrier):
            raise ValueError("carrier elements must be distinct")
        members = set(self.carrier)
        es = {_pair(x, x) for x in self.carrier}
        for x, y in edges:
            if x not in members or y not in members:
                raise ValueError(f"edge ({x!r}, {y!r}) leaves the carrier")
            es.add(_pair(x, y))
        self.edges = frozenset(es)

    def related(self, x, y) -> bool:
        return _pair(x, y) in self.edges

    def neighbours(self, x):
        return [y for y in self.carrier if self.related(x, y)]

    def __eq__(self, other):
        return isinstance(other, FinRel) and set(self.carrier) == set(other.carrier) and self.edges == other.edges

    def __hash__(self):
        return hash((frozenset(self.carrier), self.edges))

    def __repr__(self):
        off = sorted(tuple(sorted(e, key=repr)) for e in self.edges if len(e) == 2)
        return f"FinRel({list(self.carrier)}, {off})"


class FinMet:
    """Extended pseudo-metric on a finite carrier; axioms checked on construction."""

    def __init__(self, carrier: Sequence[Hashable], dist, validate: bool = True):
        self.carrier = tuple(carrier)
        n = len(self.carrier)
        self.index = {x: i for i, x in enumerate(self.carrier)}
        if len(self.index) != n:
            raise ValueError("carrier elements must be distinct")
        self.dist = tuple(tuple(ExtReal(v) for v in row) for row in dist)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise ValueError("distance matrix shape does not match the carrier")
        if validate:
            self._validate()

    def _validate(self):
        d, n = self.dist, len(self.carrier)
        for i in range(n):
            if d[i][i] != ZERO:
                raise MetricViolation(f"d({self.carrier[i]!r}, itself) = {d[i][i]} != 0")
            for j in range(i + 1, n):
                if d[i][j] != d[j][i]:
                    raise MetricViolation(f"asymmetric distance between {self.carrier[i]!r} and {self.carrier[j]!r}")
        for i, j, k in itertools.product(range(n), repeat=3):
            if d[i][k] > d[i][j] + d[j][k]:
                a, b, c = self.carrier[i], self.carrier[j], self.carrier[k]
                raise MetricViolation(f"triangle inequality fails for {a!r}, {b!r}, {c!r}")

    def d(self, x, y) -> ExtReal:
        return self.dist[self.index[x]][self.index[y]]

    def __eq__(self, other):
        if not isinstance(other, FinMet) or set(self.carrier) != set(other.carrier):
            return False
        return all(self.d(x, y) == other.d(x, y) for x in self.carrier for y in self.carrier)

    def __repr__(self):
        return f"FinMet({list(self.carrier)}, {[[str(v) for v in row] for row in self.dist]})"


def path_metric(r: FinRel) -> FinMet:
    idx = {x: i for i, x in enumerate(r.carrier)}
    adj = [[idx[y] for y in r.neighbours(x)] for x in r.carrier]
    n = len(r.carrier)
    rows = []
    for s in range(n):
        hops = [None] * n
        hops[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if hops[v] is None:
                    hops[v] = hops[u] + 1
                    queue.append(v)
        rows.append([INF if h is None else ExtReal(h) for h in hops])
    return FinMet(r.carrier, rows, validate=False)


def at_most_one(m: FinMet) -> FinRel:
    one = ExtReal(1)
    return FinRel(m.carrier, [(x, y) for x in m.carrier for y in m.carrier if m.d(x, y) <= one])


def discrete(carrier: Sequence[Hashable]) -> FinMet:
    n = len(carrier)
    return FinMet(carrier, [[ZERO if i == j else INF for j in range(n)] for i in range(n)], validate=False)


# -- metric constructions --------------------------------------------------

def scale(r, m: FinMet) -> FinMet:
    r = ExtReal(r)
    if r == ZERO:
        raise ValueError("scale factor must be positive")
    n = len(m.carrier)
    rows = [[ZERO if i == j else (INF if r.is_inf else r * m.dist[i][j]) for j in range(n)] for i in range(n)]
    return FinMet(m.carrier, rows, validate=False)


def _product(m1: FinMet, m2: FinMet, combine) -> FinMet:
    carrier = [(a, b) for a in m1.carrier for b in m2.carrier]
    rows = [[combine(m1.d(a, a2), m2.d(b, b2)) for (a2, b2) in carrier] for (a, b) in carrier]
    return FinMet(carrier, rows, validate=False)


def tensor(m1: FinMet, m2: FinMet) -> FinMet:
    return _product(m1, m2, lambda x, y: x + y)


def with_(m1: FinMet, m2: FinMet) -> FinMet:
    return _product(m1, m2, max)


def sum_(m1: FinMet, m2: FinMet) -> FinMet:
    carrier = [(0, a) for a in m1.carrier] + [(1, b) for b in m2.carrier]

    def d(p, q):
        if p[0] != q[0]:
            return INF
        return (m1 if p[0] == 0 else m2).d(p[1], q[1])

    return FinMet(carrier, [[d(p, q) for q in carrier] for p in carrier], validate=False)


def is_non_expansive(f: dict, m1: FinMet, m2: FinMet) -> bool:
    return all(m2.d(f[x], f[y]) <= m1.d(x, y) for x in m1.carrier for y in m1.carrier)


def lolli(m1: FinMet, m2: FinMet) -> FinMet:
    """Non-expansive maps m1 -> m2 (as tuples of images) under the sup metric."""
    if len(m1.carrier) > LOLLI_CARRIER_CAP or len(m2.carrier) > LOLLI_CARRIER_CAP:
        raise CarrierTooLarge(f"function-space enumeration is capped at {LOLLI_CARRIER_CAP} points per carrier")
    maps = []
    for images in itertools.product(m2.carrier, repeat=len(m1.carrier)):
        f = dict(zip(m1.carrier, images))
        if is_non_expansive(f, m1, m2):
            maps.append(images)

    def d(f, g):
        return max((m2.d(a, b) for a, b in zip(f, g)), default=ZERO)

    return FinMet(maps, [[d(f, g) for g in maps] for f in maps], validate=False)


def met_construct(kind: str, *args) -> FinMet:
    if kind == "scale":
        return scale(*args)
    table = {"tensor": tensor, "with": with_, "sum": sum_, "lolli": lolli}
    if kind not in table:
        raise ValueError(f"unknown construction {kind!r}")
    return table[kind](*args)


# -- relation-side constructions ---------------------------------------------

def rel_product(r1: FinRel, r2: FinRel) -> FinRel:
    carrier = [(a, b) for a in r1.carrier for b in r2.carrier]
    edges = [(p, q) for p in carrier for q in carrier if r1.related(p[0], q[0]) and r2.related(p[1], q[1])]
    return FinRel(carrier, edges)


def rel_tensor(r1: FinRel, r2: FinRel) -> FinRel:
    """Steps move one coordinate at a time."""
    carrier = [(a, b) for a in r1.carrier for b in r2.carrier]
    edges = [(p, q) for p in carrier for q in carrier
             if (p[1] == q[1] and r1.related(p[0], q[0])) or (p[0] == q[0] and r2.related(p[1], q[1]))]
    return FinRel(carrier, edges)


def preserves_relation(f: dict, r1: FinRel, r2: FinRel) -> bool:
    return all(r2.related(f[x], f[y]) for x in r1.carrier for y in r1.carrier if r1.related(x, y))


# -- randomized instances and lemma checks -----------------------------------

def random_relation(rng: random.Random, n: int, density: float | None = None) -> FinRel:
    density = rng.random() if density is None else density
    carrier = list(range(n))
    edges = [(i, j) for i, j in itertools.combinations(carrier, 2) if rng.random() < density]
    return FinRel(carrier, edges)


def random_metric(rng: random.Random, n: int) -> FinMet:
    """Shortest-path closure of random symmetric weights, so the axioms hold."""
    weights = [ExtReal(0), ExtReal("1/2"), ExtReal(1), ExtReal("3/2"), ExtReal(2), INF]
    d = [[ZERO if i == j else INF for j in range(n)] for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        d[i][j] = d[j][i] = rng.choice(weights)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = d[i][k] + d[k][j]
                if via < d[i][j]:
                    d[i][j] = via
    return FinMet(list(range(n)), d)


def functions(xs: Sequence, ys: Sequence, rng: random.Random, cap: int = ENUMERATION_CAP):
    """All maps xs -> ys when there are at most ``cap``; otherwise a sample of ``cap``."""
    total = len(ys) ** len(xs)
    if total <= cap:
        return True, [dict(zip(xs, im)) for im in itertools.product(ys, repeat=len(xs))]
    return False, [{x: rng.choice(ys) for x in xs} for _ in range(cap)]


@dataclass
class LemmaResult:
    name: str
    instances: int = 0
    failures: int = 0
    functions_checked: int = 0
    sampled: bool = False
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "instances": self.instances, "failures": self.failures,
                "functions_checked": self.functions_checked, "sampled": self.sampled,
                "passed": self.passed}


@dataclass
class LemmaReport:
    seed: int
    results: list[LemmaResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def get(self, name: str) -> LemmaResult:
        return next(r for r in self.results if r.name == name)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "passed": self.passed, "results": [r.to_dict() for r in self.results]}


def _fail(res: LemmaResult, witness):
    res.failures += 1
    if len(res.witnesses) < 3:
        res.witnesses.append(witness)


def check_lemmas(sample_size: int = 100, seed: int = 0, max_carrier: int = 8,
                 hom_carrier: int = 4, hom_instances: int | None = None,
                 preservation_instances: int | None = None) -> LemmaReport:
    rng = random.Random(seed)
    hom_instances = hom_instances or max(20, sample_size // 2)
    preservation_instances = preservation_instances or max(50, sample_size // 2)

    qpx = LemmaResult("QPX=X")
    for _ in range(sample_size):
        r = random_relation(rng, rng.randint(1, max_carrier))
        qpx.instances += 1
        if at_most_one(path_metric(r)) != r:
            _fail(qpx, r)

    adj = LemmaResult("Met(PX,Y)=RSRel(X,QY)")
    faithful = LemmaResult("P fully faithful")
    for _ in range(hom_instances):
        r = random_relation(rng, rng.randint(1, hom_carrier))
        m = random_metric(rng, rng.randint(1, hom_carrier))
        px, qy = path_metric(r), at_most_one(m)
        exhaustive, fs = functions(r.carrier, m.carrier, rng)
        adj.instances += 1
        adj.sampled |= not exhaustive
        for f in fs:
            adj.functions_checked += 1
            if is_non_expansive(f, px, m) != preserves_relation(f, r, qy):
                _fail(adj, (r, m, f))
        s = random_relation(rng, rng.randint(1, hom_carrier))
        ps = path_metric(s)
        exhaustive, fs = functions(r.carrier, s.carrier, rng)
        faithful.instances += 1
        faithful.sampled |= not exhaustive
        for f in fs:
            faithful.functions_checked += 1
            if is_non_expansive(f, px, ps) != preserves_relation(f, r, s):
                _fail(faithful, (r, s, f))

    prod = LemmaResult("P(X*Y)=PX*PY")
    tens = LemmaResult("P(X(x)Y)=PX(x)PY")
    for _ in range(preservation_instances):
        r1 = random_relation(rng, rng.randint(1, hom_carrier))
        r2 = random_relation(rng, rng.randint(1, hom_carrier))
        p1, p2 = path_metric(r1), path_metric(r2)
        prod.instances += 1
        if path_metric(rel_product(r1, r2)) != with_(p1, p2):
            _fail(prod, (r1, r2))
        tens.instances += 1
        if path_metric(rel_tensor(r1, r2)) != tensor(p1, p2):
            _fail(tens, (r1, r2))

    disc = LemmaResult("P(inf.X)=inf.X")
    for n in range(1, max_carrier + 1):
        carrier = list(range(n))
        disc.instances += 1
        diag = FinRel(carrier)
        if at_most_one(discrete(carrier)) != diag or path_metric(diag) != discrete(carrier):
            _fail(disc, n)

    return LemmaReport(seed, [qpx, adj, faithful, prod, tens, disc])


# -- text format -------------------------------------------------------------

def parse_space(text: str):
    """Read ``carrier a b c`` followed by edge lines ``a b``, or by ``metric`` and a matrix."""
    lines = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0][0] != "carrier":
        raise ValueError("first line must be 'carrier x1 x2 ...'")
    carrier = lines[0][1:]
    rest = lines[1:]
    if rest and rest[0] == ["metric"]:
        rows = [[ExtReal(v) for v in row] for row in rest[1:]]
        return FinMet(carrier, rows)
    edges = []
    for ln in rest:
        if len(ln) != 2:
            raise ValueError(f"edge lines need two elements, got {' '.join(ln)!r}")
        edges.append(tuple(ln))
    return FinRel(carrier, edges)
