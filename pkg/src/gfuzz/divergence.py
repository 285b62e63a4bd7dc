"""Divergences between finite distributions and their composition checks.

All functions take two ``Dist`` values over a common outcome universe and
return floats, with ``math.inf`` standing for an infinite divergence.  KL and
chi-squared are directional; ``in_relation`` applies them both ways.
"""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .dist import Dist, kleisli_bind
from .errors import MonoidMismatch
from .lang.ast import DIV_MONOID, ED, HD, KL, MD, SD, XD
from .numerics import Grade

INF = math.inf
TOL = 1e-9


def _pairs(mu: Dist, nu: Dist):
    keys = set(mu.support()) | set(nu.support())
    return [(float(mu[k]), float(nu[k])) for k in keys]


def _max_div_dir(pairs) -> float:
    best = 0.0
    for p, q in pairs:
        if p > 0:
            if q == 0:
                return INF
            best = max(best, math.log(p / q))
    return best


def max_div(mu: Dist, nu: Dist) -> float:
    pairs = _pairs(mu, nu)
    return max(_max_div_dir(pairs), _max_div_dir([(q, p) for p, q in pairs]))


def stat_dist(mu: Dist, nu: Dist) -> float:
    return 0.5 * math.fsum(abs(p - q) for p, q in _pairs(mu, nu))


def _skew_dir(pairs, scale: float) -> float:
    return math.fsum(max(p - scale * q, 0.0) for p, q in pairs)


def skew_div(eps: float, mu: Dist, nu: Dist) -> float:
    """sup over events S of mu(S) - e^eps nu(S), taken in both directions."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    pairs = _pairs(mu, nu)
    scale = math.exp(eps)
    return max(_skew_dir(pairs, scale), _skew_dir([(q, p) for p, q in pairs], scale), 0.0)


def skew_div_bruteforce(eps: float, mu: Dist, nu: Dist) -> float:
    """Subset enumeration oracle; exponential in the support size."""
    keys = sorted(set(mu.support()) | set(nu.support()), key=repr)
    if len(keys) > 20:
        raise ValueError("support too large for subset enumeration")
    scale = math.exp(eps)
    pm = [float(mu[k]) for k in keys]
    pn = [float(nu[k]) for k in keys]
    best = 0.0
    for mask in range(1 << len(keys)):
        idx = [i for i in range(len(keys)) if mask >> i & 1]
        a = math.fsum(pm[i] for i in idx)
        b = math.fsum(pn[i] for i in idx)
        best = max(best, a - scale * b, b - scale * a)
    return best


def kl_div(mu: Dist, nu: Dist) -> float:
    terms = []
    for p, q in _pairs(mu, nu):
        if p > 0:
            if q == 0:
                return INF
            terms.append(p * math.log(p / q))
    return max(math.fsum(terms), 0.0)


def chi2_div(mu: Dist, nu: Dist) -> float:
    terms = []
    for p, q in _pairs(mu, nu):
        if q == 0:
            if p > 0:
                return INF
            continue
        terms.append((p - q) ** 2 / q)
    return math.fsum(terms)


def hellinger(mu: Dist, nu: Dist) -> float:
    s = math.fsum((math.sqrt(p) - math.sqrt(q)) ** 2 for p, q in _pairs(mu, nu))
    return math.sqrt(min(max(0.5 * s, 0.0), 1.0))


DIRECTIONAL = {MD: max_div, SD: stat_dist, KL: kl_div, XD: chi2_div, HD: hellinger}


def divergence(d: str, mu: Dist, nu: Dist, eps: float | None = None) -> float:
    if d == ED:
        if eps is None:
            raise ValueError("ED needs eps")
        return skew_div(eps, mu, nu)
    return DIRECTIONAL[d](mu, nu)


def divergence_table(mu: Dist, nu: Dist, eps: float) -> dict[str, float]:
    return {
        "MD": max_div(mu, nu),
        "SD": stat_dist(mu, nu),
        f"AD({eps:g})": skew_div(eps, mu, nu),
        "KL": kl_div(mu, nu),
        "XD": chi2_div(mu, nu),
        "HD": hellinger(mu, nu),
    }


def in_relation(d: str, grade, mu: Dist, nu: Dist, tol: float = 0.0) -> bool:
    """Two-sided membership.  MD and SD take a plain distance bound."""
    if d in (MD, SD):
        if isinstance(grade, Grade):
            raise MonoidMismatch(f"{d} takes a distance bound, not a grade")
        return DIRECTIONAL[d](mu, nu) <= float(grade) + tol
    if not isinstance(grade, Grade) or grade.monoid != DIV_MONOID[d]:
        raise MonoidMismatch(f"grade {grade} does not belong to {d}")
    if d == ED:
        return skew_div(grade.eps, mu, nu) <= grade.delta + tol
    f = DIRECTIONAL[d]
    bound = grade.values[0] + tol
    return f(mu, nu) <= bound and f(nu, mu) <= bound


# -- composability -----------------------------------------------------------

def compose_bound(d: str, a, b):
    if d == ED:
        return (a[0] + b[0], a[1] + b[1])
    if d in (MD, SD, KL):
        return a + b
    if d == XD:
        return INF if INF in (a, b) else a + b + a * b
    if d == HD:
        return math.hypot(a, b)
    raise ValueError(f"unknown divergence {d!r}")


def random_dist(rng: random.Random, support, sparsity: float = 0.15) -> Dist:
    w = [0.0 if rng.random() < sparsity else rng.random() ** 2 for _ in support]
    if not any(w):
        w[rng.randrange(len(w))] = 1.0
    total = math.fsum(w)
    return Dist({s: x / total for s, x in zip(support, w) if x}, mode="FLOAT")


@dataclass
class TrialResult:
    lhs: float
    rhs: float

    @property
    def violation(self) -> float:
        if self.lhs <= self.rhs:
            return 0.0
        return INF if self.rhs != INF and self.lhs == INF else self.lhs - self.rhs


@dataclass
class CompositionReport:
    divergence: str
    trials: int
    seed: int
    max_violation: float = 0.0
    violations: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"divergence": self.divergence, "trials": self.trials, "seed": self.seed,
                "max_violation": self.max_violation, "violations": self.violations,
                "passed": self.passed}


def composability_trial(d: str, seed: int, index: int) -> TrialResult:
    rng = random.Random(f"{seed}/{d}/{index}")
    xs = list(range(rng.randint(1, 6)))
    ys = list(range(rng.randint(1, 6)))
    mu, nu = random_dist(rng, xs), random_dist(rng, xs)
    f = {x: random_dist(rng, ys) for x in xs}
    g = {x: random_dist(rng, ys) for x in xs}
    lifted_f, lifted_g = kleisli_bind(mu, f.__getitem__), kleisli_bind(nu, g.__getitem__)
    if d == ED:
        e1, e2 = rng.uniform(0, 2), rng.uniform(0, 2)
        d1 = skew_div(e1, mu, nu)
        d2 = max(skew_div(e2, f[x], g[x]) for x in xs)
        return TrialResult(skew_div(e1 + e2, lifted_f, lifted_g), d1 + d2)
    div = DIRECTIONAL[d]
    outer = div(mu, nu)
    inner = max(div(f[x], g[x]) for x in xs)
    return TrialResult(div(lifted_f, lifted_g), compose_bound(d, outer, inner))


def _run_chunk(args):
    d, seed, indices = args
    return [composability_trial(d, seed, i) for i in indices]


def check_composability(d: str, trials: int, seed: int = 0, jobs: int = 1, tol: float = TOL) -> CompositionReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indices = list(range(trials))
    if jobs > 1:
        chunks = [(d, seed, indices[j::jobs]) for j in range(jobs)]
        with ProcessPoolExecutor(jobs) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    else:
        results = _run_chunk((d, seed, indices))
    report = CompositionReport(d, trials, seed)
    for i, r in enumerate(results):
        v = r.violation
        if v > report.max_violation:
            report.max_violation = v
            report.worst = {"lhs": r.lhs, "rhs": r.rhs}
        if v > tol:
            report.violations += 1
    return report


# -- triangle inequality -----------------------------------------------------

def triangle_gap(div, a: Dist, b: Dist, c: Dist) -> float:
    """d(a, c) - d(a, b) - d(b, c); positive means the inequality fails."""
    ab, bc, ac = div(a, b), div(b, c), div(a, c)
    if ab == INF or bc == INF:
        return -INF
    return ac - ab - bc


def find_triangle_witness(div, probabilities) -> tuple[tuple[float, float, float], float]:
    """Exhaustive search over Bernoulli triples for the worst triangle gap."""
    from .dist import bernoulli
    dists = {p: bernoulli(p) for p in probabilities}
    best, arg = -INF, None
    for p, q, r in itertools.product(probabilities, repeat=3):
        gap = triangle_gap(div, dists[p], dists[q], dists[r])
        if gap > best:
            best, arg = gap, (p, q, r)
    return arg, best
