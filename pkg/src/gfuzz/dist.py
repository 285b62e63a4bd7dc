"""Finite-support distributions and grid-discretized mechanisms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Callable, Hashable, Iterable, Mapping

from .errors import GridTooCoarse, GridTooLarge, InvalidDistribution, TruncationTooSmall

EXACT = "EXACT"
FLOAT = "FLOAT"
FLOAT_TOL = 1e-9
DEFAULT_MAX_CELLS = 100_000


def _is_exact(p) -> bool:
    return isinstance(p, Rational) and not isinstance(p, bool)


class Dist:
    """Immutable map outcome -> probability.

    EXACT distributions hold Fractions summing to exactly 1; FLOAT ones hold
    floats summing to 1 within ``FLOAT_TOL``.  Zero entries are never stored.
    """

    __slots__ = ("_p", "mode", "_hash")

    def __init__(self, probs: Mapping[Hashable, object] | Iterable, mode: str | None = None):
        items = probs.items() if isinstance(probs, Mapping) else probs
        p = {}
        exact = True
        for v, q in items:
            if isinstance(q, Decimal):
                q = Fraction(q)
            if not _is_exact(q):
                exact = False
            if q < 0:
                raise InvalidDistribution(f"negative probability {q} for {v!r}")
            if q:
                p[v] = p[v] + q if v in p else q
        if mode is None:
            mode = EXACT if exact else FLOAT
        if mode == FLOAT:
            p = {v: float(q) for v, q in p.items()}
            total = math.fsum(p.values())
            if abs(total - 1.0) > FLOAT_TOL:
                raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
        elif mode == EXACT:
            if not exact:
                raise InvalidDistribution("EXACT mode needs rational probabilities")
            p = {v: Fraction(q) for v, q in p.items()}
            total = sum(p.values(), Fraction(0))
            if total != 1:
                raise InvalidDistribution(f"probabilities sum to {total}, not 1")
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self._p = p
        self.mode = mode
        self._hash = None

    @classmethod
    def _trusted(cls, p: dict, mode: str) -> "Dist":
        d = object.__new__(cls)
        d._p = p
        d.mode = mode
        d._hash = None
        return d

    def __getitem__(self, v):
        return self._p.get(v, 0)

    def prob(self, v) -> float:
        return float(self._p.get(v, 0))

    def support(self):
        return self._p.keys()

    def items(self):
        return self._p.items()

    def __len__(self):
        return len(self._p)

    def __iter__(self):
        return iter(self._p)

    def __eq__(self, other):
        return isinstance(other, Dist) and self._p == other._p

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._p.items()))
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{v!r}: {q}" for v, q in list(self._p.items())[:8])
        more = ", ..." if len(self._p) > 8 else ""
        return f"Dist({self.mode}, {{{body}{more}}})"

    def map(self, h: Callable) -> "Dist":
        """Push forward along a deterministic function."""
        out: dict = {}
        for v, q in self._p.items():
            w = h(v)
            out[w] = out.get(w, 0) + q
        return Dist._trusted(out, self.mode)

    def to_float(self) -> "Dist":
        if self.mode == FLOAT:
            return self
        return Dist._trusted({v: float(q) for v, q in self._p.items()}, FLOAT)


def dirac(v) -> Dist:
    return Dist._trusted({v: Fraction(1)}, EXACT)


def kleisli_bind(mu: Dist, f: Callable[[Hashable], Dist]) -> Dist:
    out: dict = {}
    floaty = mu.mode == FLOAT
    for x, px in mu.items():
        fx = f(x)
        if fx.mode == FLOAT:
            floaty = True
        for y, py in fx.items():
            q = px * py if not floaty else float(px) * float(py)
            out[y] = out[y] + q if y in out else q
    if floaty:
        return Dist._trusted({y: float(q) for y, q in out.items() if q}, FLOAT)
    return Dist._trusted({y: q for y, q in out.items() if q}, EXACT)


def tv_distance(mu: Dist, nu: Dist) -> float:
    keys = set(mu.support()) | set(nu.support())
    return 0.5 * math.fsum(abs(float(mu[k]) - float(nu[k])) for k in keys)


def bernoulli(p) -> Dist:
    if isinstance(p, Decimal):
        p = Fraction(p)
    p = min(max(p, 0), 1)
    if _is_exact(p):
        p = Fraction(p)
        return Dist._trusted({k: q for k, q in ((True, p), (False, 1 - p)) if q}, EXACT)
    p = float(p)
    return Dist._trusted({k: q for k, q in ((True, p), (False, 1.0 - p)) if q}, FLOAT)


@dataclass(frozen=True)
class Grid:
    """Half-open cells [lo + i*step, lo + (i+1)*step), labelled by left endpoint."""

    lo: Decimal
    hi: Decimal
    step: Decimal
    max_cells: int = DEFAULT_MAX_CELLS

    def __post_init__(self):
        for name in ("lo", "hi", "step"):
            object.__setattr__(self, name, Decimal(str(getattr(self, name))))
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")
        n = (self.hi - self.lo) / self.step
        if n != n.to_integral_value():
            raise ValueError(f"(hi - lo)/step = {n} is not an integer")
        if int(n) > self.max_cells:
            raise GridTooLarge(f"grid has {int(n)} cells, cap is {self.max_cells}")

    @classmethod
    def parse(cls, text: str, max_cells: int = DEFAULT_MAX_CELLS) -> "Grid":
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"grid must be 'lo,hi,step', got {text!r}")
        return cls(*(Decimal(s) for s in parts), max_cells=max_cells)

    @property
    def cells(self) -> int:
        return int((self.hi - self.lo) / self.step)

    def points(self) -> list[Decimal]:
        return [self.lo + i * self.step for i in range(self.cells)]

    def __str__(self):
        return f"{self.lo},{self.hi},{self.step}"


def default_grid(mu: float, b: float, step: Decimal = Decimal("0.05"), max_cells: int = 10_000) -> Grid:
    """Step-aligned grid covering mu +- 8b."""
    step = Decimal(str(step))
    lo = (Decimal(repr(mu - 8 * b)) / step).to_integral_value(rounding="ROUND_FLOOR") * step
    hi = (Decimal(repr(mu + 8 * b)) / step).to_integral_value(rounding="ROUND_CEILING") * step
    while (hi - lo) / step < 3:
        hi += step
    while (hi - lo) / step > max_cells:
        step *= 2
        lo = (lo / step).to_integral_value(rounding="ROUND_FLOOR") * step
        hi = (hi / step).to_integral_value(rounding="ROUND_CEILING") * step
    return Grid(lo, hi, step, max_cells=max_cells)


def _binned(g: Grid, mass: Callable[[float, float], float], left_tail, right_tail) -> Dist:
    n = g.cells
    if n < 3:
        raise GridTooCoarse(f"grid {g} has {n} cells; at least 3 are needed")
    pts = g.points()
    xs = [float(p) for p in pts] + [float(g.hi)]
    out = {}
    for i in range(n):
        if i == 0:
            q = left_tail(xs[1])
        elif i == n - 1:
            q = right_tail(xs[n - 1])
        else:
            q = mass(xs[i], xs[i + 1])
        if q > 0:
            out[pts[i]] = q
    total = math.fsum(out.values())
    if abs(total - 1.0) > FLOAT_TOL:
        raise InvalidDistribution(f"binned mass {total!r} is not 1")
    return Dist._trusted(out, FLOAT)


def laplace_cdf(x: float, mu: float, b: float) -> float:
    z = (x - mu) / b
    return 0.5 * math.exp(z) if z < 0 else 1.0 - 0.5 * math.exp(-z)


def laplace_grid(mu: float, b: float, g: Grid) -> Dist:
    mu, b = float(mu), float(b)
    if not b > 0:
        raise ValueError("Laplace scale must be positive")

    def lower(x):  # P(X < x)
        z = (x - mu) / b
        return 0.5 * math.exp(z) if z <= 0 else 1.0 - 0.5 * math.exp(-z)

    def upper(x):  # P(X >= x)
        z = (x - mu) / b
        return 0.5 * math.exp(-z) if z >= 0 else 1.0 - 0.5 * math.exp(z)

    def mass(x0, x1):
        z0, z1 = (x0 - mu) / b, (x1 - mu) / b
        if z0 >= 0:
            return -0.5 * math.exp(-z0) * math.expm1(z0 - z1)
        if z1 <= 0:
            return -0.5 * math.exp(z1) * math.expm1(z0 - z1)
        return 1.0 - 0.5 * math.exp(-z1) - 0.5 * math.exp(z0)

    return _binned(g, mass, lower, upper)


def gaussian_cdf(x: float, mu: float, sigma: float) -> float:
    return 0.5 * math.erfc(-(x - mu) / (sigma * math.sqrt(2)))


def gaussian_grid(mu: float, sigma: float, g: Grid) -> Dist:
    """Gaussian cell masses from erfc (relative accuracy ~1e-15 per tail term)."""
    mu, sigma = float(mu), float(sigma)
    if not sigma > 0:
        raise ValueError("Gaussian sigma must be positive")
    k = 1.0 / (sigma * math.sqrt(2))

    def lower(x):
        return 0.5 * math.erfc(-(x - mu) * k)

    def upper(x):
        return 0.5 * math.erfc((x - mu) * k)

    def mass(x0, x1):
        t0, t1 = (x0 - mu) * k, (x1 - mu) * k
        if t0 >= 0:
            return 0.5 * (math.erfc(t0) - math.erfc(t1))
        if t1 <= 0:
            return 0.5 * (math.erfc(-t1) - math.erfc(-t0))
        return 1.0 - 0.5 * math.erfc(t1) - 0.5 * math.erfc(-t0)

    return _binned(g, mass, lower, upper)


TAIL_TOL = 1e-12


def _poisson_pmf(alpha: float, n: int) -> float:
    return math.exp(n * math.log(alpha) - alpha - math.lgamma(n + 1))


def poisson_tail(alpha: float, n_max: int) -> float:
    """P(N > n_max), summed term by term from n_max + 1."""
    total, n = 0.0, n_max + 1
    term = _poisson_pmf(alpha, n)
    while True:
        total += term
        n += 1
        term *= alpha / n
        if n > alpha and term < 1e-18 * max(total, 1e-300):
            return total


def poisson_trunc(alpha: float, n_max: int | None = None) -> Dist:
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError("Poisson rate must be non-negative")
    if alpha == 0:
        return Dist._trusted({0: 1.0}, FLOAT)
    if n_max is None:
        n_max = int(alpha) + 1
        while poisson_tail(alpha, n_max) >= TAIL_TOL / 10:
            n_max += 1
    tail = poisson_tail(alpha, n_max)
    if tail >= TAIL_TOL:
        raise TruncationTooSmall(f"Poisson({alpha}) tail beyond {n_max} is {tail:.3g} >= {TAIL_TOL}")
    p = {n: _poisson_pmf(alpha, n) for n in range(n_max + 1)}
    p[n_max] += tail
    total = math.fsum(p.values())
    return Dist._trusted({n: q / total for n, q in p.items() if q > 0}, FLOAT)


def parse_dist_file(text: str) -> Dist:
    """``label<TAB>probability`` lines; ``#`` starts a comment."""
    from .numerics import parse_rational

    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise InvalidDistribution(f"line {lineno}: expected 'value<TAB>probability'")
        try:
            q = parse_rational(parts[1].strip())
        except ValueError as exc:
            raise InvalidDistribution(f"line {lineno}: {exc}") from None
        entries.append((parts[0].strip(), q))
    total = sum((q for _, q in entries), Fraction(0))
    return Dist(entries, EXACT if total == 1 else FLOAT)
