"""One test per acceptance criterion; each records a PASS/FAIL line for the terminal summary."""

import itertools
import math
import random
import time
from fractions import Fraction

import pytest

from gfuzz.dist import Grid, bernoulli, dirac, gaussian_grid, kleisli_bind, laplace_grid, poisson_trunc, tv_distance
from gfuzz.divergence import (
    chi2_div, check_composability, find_triangle_witness, hellinger, kl_div, max_div, random_dist,
    skew_div, stat_dist,
)
from gfuzz.lang import ast as A
from gfuzz.lang import parse_term, pretty_type
from gfuzz.metricspace import check_lemmas
from gfuzz.typecheck import infer
from gfuzz.verify import DbUniverse, verify_bound

from conftest import PROGRAMS, read_program, record

TOL = 1e-9
VERIFY_GRID = Grid.parse("-12,12,0.05")


def timed(f, *args, **kw):
    t = time.perf_counter()
    out = f(*args, **kw)
    return out, time.perf_counter() - t


# -- 1, 2: golden typing --------------------------------------------------------

def test_c01_two_q_type():
    j, dt = timed(lambda: infer({}, parse_term(read_program("two_q.gfuzz"))))
    t = j.type
    ok = (isinstance(t, A.Lolli) and t.dom == A.DB and isinstance(t.cod, A.Monad) and t.cod.div == A.ED
          and t.cod.grade.eps == 2 and t.cod.grade.delta == pytest.approx(0.2, abs=1e-12)
          and t.cod.body == A.REAL and dt < 1)
    record("C1 golden typing two_q", ok, f"{pretty_type(t)}  {dt:.3f}s")
    assert ok


def test_c02_two_q_prime_type():
    j, dt = timed(lambda: infer({}, parse_term(read_program("two_q_prime.gfuzz"))))
    t = j.type
    ok = (isinstance(t, A.Lolli) and t.dom == A.Bang(2, A.DB) and t.cod.div == A.ED
          and t.cod.grade.eps == 1 and t.cod.grade.delta == pytest.approx(0.1, abs=1e-12)
          and t.cod.body == A.REAL and dt < 1)
    record("C2 golden typing two_q'", ok, f"{pretty_type(t)}  {dt:.3f}s")
    assert ok


# -- 3, 4: end-to-end certification ---------------------------------------------

def test_c03_two_q_certified():
    u = DbUniverse.load(PROGRAMS / "universe.json")
    assert len(u.records) == 3 and u.max_db_size == 3
    rep, dt = timed(verify_bound, read_program("two_q.gfuzz"), u, grid=VERIFY_GRID)
    ok = (rep.eps == 2.0 and rep.bound == pytest.approx(0.2, abs=1e-12) and rep.pair_count > 0
          and all(p.measured <= 0.2 + TOL for p in rep.pairs) and dt < 60)
    record("C3 verify two_q", ok, f"pairs={rep.pair_count} max={rep.max_measured:.3g} bound=0.2 {dt:.1f}s")
    assert ok


def test_c04_group_privacy():
    u = DbUniverse.load(PROGRAMS / "universe.json")
    rep, dt = timed(verify_bound, read_program("two_q_prime.gfuzz"), u, k=2, grid=VERIFY_GRID)
    eps, delta = 1.0, 0.1
    ok = (rep.eps == 2 * eps and rep.bound == pytest.approx((1 + math.exp(eps)) * delta, abs=1e-12)
          and rep.pair_count > 0 and rep.passed and dt < 60)
    record("C4 group privacy two_q' k=2", ok,
           f"pairs={rep.pair_count} max={rep.max_measured:.3g} bound={rep.bound:.6g} {dt:.1f}s")
    assert ok


# -- 5: mechanism bounds --------------------------------------------------------

def pairs_within_one(lo, hi, n=25):
    rng = random.Random(5)
    out = []
    for i in range(n):
        x = lo + (hi - lo) * i / (n - 1)
        out.append((x, x + rng.uniform(0.05, 1.0)))
    return out


def test_c05a_laplace_md():
    b = 1.0
    worst = -math.inf
    rows = pairs_within_one(-3, 3)
    for m1, m2 in rows:
        md = max_div(laplace_grid(m1, b, VERIFY_GRID), laplace_grid(m2, b, VERIFY_GRID))
        worst = max(worst, md - abs(m1 - m2) / b)
    ok = len(rows) >= 20 and worst <= TOL
    record("C5 Laplace MD <= |mu-mu'|/b", ok, f"pairs={len(rows)} worst excess={worst:.3g}")
    assert ok


def test_c05b_bernoulli_sd():
    rng = random.Random(6)
    worst = 0.0
    n = 0
    for _ in range(25):
        p = Fraction(rng.randint(0, 100), 100)
        q = min(Fraction(1), p + Fraction(rng.randint(1, 100), 100))
        worst = max(worst, abs(stat_dist(bernoulli(p), bernoulli(q)) - float(q - p)))
        n += 1
    ok = worst <= 1e-12
    record("C5 Bernoulli SD = |p-p'|", ok, f"pairs={n} worst error={worst:.3g}")
    assert ok


def test_c05c_normal_kl():
    worst = -math.inf
    rows = pairs_within_one(-2, 2)
    for m1, m2 in rows:
        kl = kl_div(gaussian_grid(m1, 1.0, VERIFY_GRID), gaussian_grid(m2, 1.0, VERIFY_GRID))
        worst = max(worst, kl - (m1 - m2) ** 2)
    ok = worst <= 1e-6
    record("C5 Normal KL <= (mu1-mu2)^2", ok, f"pairs={len(rows)} worst excess={worst:.3g}")
    assert ok


def test_c05d_poisson_hd():
    worst = -math.inf
    rows = pairs_within_one(0, 8)
    for a1, a2 in rows:
        h = hellinger(poisson_trunc(a1), poisson_trunc(a2))
        worst = max(worst, h - 0.5 * (math.sqrt(a1) - math.sqrt(a2)) ** 2)
    ok = worst <= 1e-6
    record("C5 Poisson HD <= |sqrt a - sqrt a'|^2/2", ok, f"pairs={len(rows)} worst excess={worst:.3g}")
    assert ok


# -- 6: composability -------------------------------------------------------------

def test_c06_composability():
    t = time.perf_counter()
    reports = [check_composability(d, 1000, seed=42) for d in ("SD", "KL", "XD", "HD", "ED")]
    dt = time.perf_counter() - t
    ok = all(r.trials == 1000 and r.violations == 0 for r in reports) and dt < 30
    detail = " ".join(f"{r.divergence}:{r.violations}" for r in reports)
    record("C6 composability", ok, f"violations {detail} {dt:.1f}s")
    assert ok


# -- 7: skew-divergence oracle ------------------------------------------------------

def subset_skew(eps, mu, nu):
    xs = sorted(set(mu.support()) | set(nu.support()))
    a = math.exp(eps)
    best = 0.0
    for bits in itertools.product((0, 1), repeat=len(xs)):
        s = [x for x, b in zip(xs, bits) if b]
        pm, pn = sum(mu[x] for x in s), sum(nu[x] for x in s)
        best = max(best, float(pm) - a * float(pn), float(pn) - a * float(pm))
    return best


def test_c07_skew_oracle():
    rng = random.Random(7)
    worst, n = 0.0, 0
    for i in range(220):
        xs = list(range(rng.randint(1, 12)))
        mu, nu = random_dist(rng, xs), random_dist(rng, xs)
        eps = 0.0 if i % 10 == 0 else rng.uniform(0, 3)
        worst = max(worst, abs(skew_div(eps, mu, nu) - subset_skew(eps, mu, nu)))
        n += 1
    ok = n >= 200 and worst <= 1e-12
    record("C7 skew closed form = subset brute force", ok, f"cases={n} worst error={worst:.3g}")
    assert ok


# -- 8: path construction ------------------------------------------------------------

def test_c08_lemmas():
    rep, dt = timed(check_lemmas, 100, 42)
    qpx, adj = rep.get("QPX=X"), rep.get("Met(PX,Y)=RSRel(X,QY)")
    prod, tens = rep.get("P(X*Y)=PX*PY"), rep.get("P(X(x)Y)=PX(x)PY")
    ok = (rep.passed and qpx.instances >= 100 and adj.instances >= 20 and not adj.sampled
          and prod.instances >= 50 and tens.instances >= 50 and dt < 30)
    record("C8 path-construction lemmas", ok,
           f"QPX={qpx.instances} adj={adj.instances} prod={prod.instances} tensor={tens.instances} {dt:.1f}s")
    assert ok


# -- 9: triangle inequality ------------------------------------------------------------

KL_WITNESS = (Fraction(1, 20), Fraction(3, 5), Fraction(19, 20))
XD_WITNESS = (Fraction(1, 20), Fraction(7, 10), Fraction(19, 20))


def gap(f, triple):
    a, b, c = (bernoulli(p) for p in triple)
    return f(a, c) - f(a, b) - f(b, c)


def test_c09_triangle():
    rng = random.Random(9)
    worst = {"MD": 0.0, "SD": 0.0, "HD": 0.0}
    fs = {"MD": max_div, "SD": stat_dist, "HD": hellinger}
    for _ in range(1000):
        xs = list(range(rng.randint(1, 6)))
        a, b, c = (random_dist(rng, xs) for _ in range(3))
        for name, f in fs.items():
            ac, ab, bc = f(a, c), f(a, b), f(b, c)
            if math.isfinite(ab + bc):
                worst[name] = max(worst[name], ac - ab - bc)
    grid = [Fraction(i, 20) for i in range(1, 20)]
    kl_found, _ = find_triangle_witness(kl_div, grid)
    xd_found, _ = find_triangle_witness(chi2_div, grid)
    ok = (all(v <= 1e-12 for v in worst.values()) and gap(kl_div, KL_WITNESS) > 0 and gap(chi2_div, XD_WITNESS) > 0
          and tuple(kl_found) == KL_WITNESS and tuple(xd_found) == XD_WITNESS)
    record("C9 triangle inequality", ok,
           f"metric excess {max(worst.values()):.3g}; KL gap {gap(kl_div, KL_WITNESS):.4f}; "
           f"XD gap {gap(chi2_div, XD_WITNESS):.4f}")
    assert ok


# -- 10: monad laws ---------------------------------------------------------------------

def test_c10_monad_laws():
    rng = random.Random(10)
    worst = 0.0
    for _ in range(1000):
        xs, ys, zs = (list(range(rng.randint(1, 5))) for _ in range(3))
        mu = random_dist(rng, xs)
        fk = {x: random_dist(rng, ys) for x in xs}
        gk = {y: random_dist(rng, zs) for y in ys}
        a = rng.choice(xs)
        left = tv_distance(kleisli_bind(dirac(a), fk.__getitem__), fk[a])
        right = tv_distance(kleisli_bind(mu, dirac), mu)
        assoc = tv_distance(kleisli_bind(kleisli_bind(mu, fk.__getitem__), gk.__getitem__),
                            kleisli_bind(mu, lambda x: kleisli_bind(fk[x], gk.__getitem__)))
        worst = max(worst, left, right, assoc)
    ok = worst <= 1e-9
    record("C10 monad laws", ok, f"trials=1000 worst TV={worst:.3g}")
    assert ok
