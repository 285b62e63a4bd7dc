import math
from fractions import Fraction

import pytest

from gfuzz.errors import (
    InvalidStaticArg, MonoidMismatch, SensitivityExceeded, SubsumptionFailure, TypeMismatch,
    UnboundVariable, UnknownPrimitive,
)
from gfuzz.lang import ast as A
from gfuzz.lang import parse_term, parse_type, pretty_type
from gfuzz.lang.context import ctx_leq
from gfuzz.numerics import INF, ExtReal, Grade
from gfuzz.typecheck import (
    Judgment, advanced_composition, gaussian_scale, infer, is_subtype, join_types,
    primitive_signature, subsume,
)

from conftest import read_program

R = A.REAL
TWO_Q = read_program("two_q.gfuzz")
TWO_Q_PRIME = read_program("two_q_prime.gfuzz")


def ty(src, env=None):
    return infer(env or {}, parse_term(src))


def test_two_q():
    j = ty(TWO_Q)
    assert pretty_type(j.type) == "Db -o O[ED (2.0, 0.2)] Real"
    assert j.usage == {}
    body = parse_term(TWO_Q).body
    assert infer({"db": A.DB}, body).usage == {"db": ExtReal(1)}


def test_two_q_prime():
    assert pretty_type(ty(TWO_Q_PRIME).type) == "!{2} Db -o O[ED (1.0, 0.1)] Real"


def test_identity():
    j = ty(r"\(x : Real). x")
    assert j.type == A.Lolli(R, R) and j.usage == {}


def test_var_and_add_usage():
    env = {"x": R, "y": R}
    assert ty("x + x + y", env).usage == {"x": ExtReal(2), "y": ExtReal(1)}
    assert ty("<x, x + y>", env).usage == {"x": ExtReal(1), "y": ExtReal(1)}
    assert ty("(x, x)", env).usage == {"x": ExtReal(2)}
    assert ty("!{3} x", env).usage == {"x": ExtReal(3)}


def test_lambda_sensitivity_limit():
    with pytest.raises(SensitivityExceeded):
        ty(r"\(x : Real). x + x")
    j = ty(r"\(x : !{2} Real). let !y = x in y + y")
    assert j.type == A.Lolli(A.Bang(ExtReal(2), R), R)


def test_let_bang_scaling():
    # usage 3 of y against a !2 box needs the box at 3/2
    j = ty("let !y = b in y + y + y", {"b": A.Bang(ExtReal(2), R)})
    assert j.usage == {"b": ExtReal(Fraction(3, 2))}
    assert ty("let !y = b in 1.0", {"b": A.Bang(ExtReal(2), R)}).usage == {}


def test_let_tensor_and_case():
    env = {"p": A.Tensor(R, R), "s": A.Sum(R, R), "z": R}
    assert ty("let (a, b) = p in a + a + b", env).usage == {"p": ExtReal(2)}
    j = ty("case s of inl a. a + z | inr b. b + b", env)
    assert j.type == R and j.usage == {"s": ExtReal(2), "z": ExtReal(1)}


def test_return_scales_to_infinity():
    j = ty("return[ED] x", {"x": R})
    assert j.type == A.Monad("ED", Grade.ed(0, 0), R)
    assert j.usage == {"x": INF}


def test_bind_graded_uses_max():
    env = {"x": A.CEIL}
    j = ty("bind a <- Gaussian[1, 0.1] x; bind b <- Gaussian[1, 0.1] x; return[ED] a + b", env)
    assert j.usage == {"x": ExtReal(1)}
    assert j.type == A.Monad("ED", Grade.ed(2, 0.2), R)


def test_bind_ungraded_adds():
    # two Laplace draws on one input cost twice the privacy
    env = {"x": A.Bang(ExtReal(2), R)}
    j = ty("let !y = x in bind a <- Laplace[1] !y; bind b <- Laplace[1] !y; return[MD] a + b", env)
    assert j.usage == {"x": ExtReal(1)}
    with pytest.raises(SensitivityExceeded):
        ty(r"\(y : Real). bind a <- Laplace[1] !y; bind b <- Laplace[1] !y; return[MD] a + b")


def test_bind_across_divergences():
    with pytest.raises(MonoidMismatch):
        ty("bind a <- Normal x; return[ED] a", {"x": A.CEIL})


def test_errors():
    with pytest.raises(UnboundVariable):
        ty("x")
    with pytest.raises(TypeMismatch):
        ty("x + y", {"x": R, "y": A.CEIL})
    with pytest.raises(TypeMismatch):
        ty("Laplace[1] 1.0")
    with pytest.raises(InvalidStaticArg):
        ty("Gaussian[1, 2]")
    with pytest.raises(InvalidStaticArg):
        ty("Laplace[0]")
    with pytest.raises(UnknownPrimitive):
        primitive_signature("Cauchy", ())


def test_type_error_span():
    with pytest.raises(TypeMismatch) as info:
        ty("\\(x : Real).\n  x + size")
    assert info.value.span is not None and info.value.span.line == 2


def test_primitive_signatures():
    assert primitive_signature("Laplace", (Fraction(1),)) == A.Lolli(A.Bang(ExtReal(1), R), A.Monad("MD", Grade.unit(), R))
    assert pretty_type(primitive_signature("Gaussian", (1, Fraction(1, 10)))) == "CeilReal -o O[ED (1.0, 0.1)] Real"
    assert pretty_type(primitive_signature("Normal", ())) == "CeilReal -o O[KL 1.0] Real"
    assert pretty_type(primitive_signature("Poisson", ())) == "CeilReal -o O[HD 0.5] Nat"
    assert pretty_type(primitive_signature("Bernoulli", ())) == "Real -o O[SD] Bool"
    assert pretty_type(primitive_signature("count", ("adult",))) == "Db -o CeilReal"


def test_advanced_composition_grade():
    eps_star = math.sqrt(2 * 2 * math.log(20)) + 2 * (math.e - 1)
    assert eps_star == pytest.approx(6.898200422122661, abs=1e-12)
    e, d = advanced_composition(2, 1.0, 0.1, 0.05)
    assert e == pytest.approx(eps_star, abs=1e-12) and d == pytest.approx(0.25, abs=1e-15)
    j = ty(read_program("ac2.gfuzz"))
    out = j.type.cod.cod
    assert out.grade.eps == pytest.approx(eps_star, abs=1e-12)
    assert out.grade.delta == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(InvalidStaticArg):
        primitive_signature("AC_0", (1, Fraction(1, 10), Fraction(1, 20)))


def test_ac_rejects_wrong_step_shape():
    with pytest.raises(TypeMismatch):
        ty(r"AC_2[1, 0.1, 0.05] (\(s : Real). s)")


def test_gaussian_scale_verbatim():
    assert gaussian_scale(1.0, 0.1) == pytest.approx(2 * math.log(12.5))


def test_subsume_examples():
    j = Judgment(parse_type("O[ED (1, 0.1)] Real"), {})
    assert subsume(j, parse_type("O[ED (2, 0.2)] Real")).type == parse_type("O[ED (2, 0.2)] Real")
    k = Judgment(parse_type("O[KL 1] Real"), {})
    assert subsume(k, parse_type("O[KL 1] Real")).type == k.type
    with pytest.raises(SubsumptionFailure) as info:
        subsume(Judgment(parse_type("O[ED (2, 0)] Real"), {}), parse_type("O[ED (1, 1)] Real"))
    assert list(info.value.pairs) == [(Grade.ed(2, 0), Grade.ed(1, 1))]
    with pytest.raises(TypeMismatch):
        subsume(j, parse_type("O[ED (2, 0.2)] Db"))


def test_subsume_contravariant_position():
    j = Judgment(parse_type("O[KL 2] Real -o Real"), {})
    assert subsume(j, parse_type("O[KL 1] Real -o Real"))
    with pytest.raises(SubsumptionFailure):
        subsume(j, parse_type("O[KL 3] Real -o Real"))


def test_subsume_idempotent():
    j = Judgment(parse_type("O[XD 1] Real * O[HD 1] Nat"), {"x": ExtReal(1)})
    t = parse_type("O[XD 2] Real * O[HD 3] Nat")
    once = subsume(j, t)
    assert subsume(once, t) == once


def test_bind_grade_associativity():
    env = {"d": A.DB}
    for prim, div in [("Normal", "KL"), ("Poisson", "HD"), ("Gaussian[1, 0.1]", "ED")]:
        q = f"{prim} (size d)"
        left = f"bind a <- (bind b <- {q}; {q}); {q}"
        right = f"bind b <- {q}; bind a <- {q}; {q}"
        g1, g2 = ty(left, env).type.grade, ty(right, env).type.grade
        assert g1.monoid == g2.monoid
        assert g1.values == pytest.approx(g2.values, abs=1e-12)
    assert ty("bind b <- Normal (size d); bind a <- Normal (size d); Normal (size d)", env).type.grade == Grade.kl(3)


def test_subtyping_and_join():
    assert is_subtype(A.Bang(ExtReal(3), R), A.Bang(ExtReal(2), R))
    assert not is_subtype(A.Bang(ExtReal(1), R), A.Bang(ExtReal(2), R))
    assert is_subtype(A.Lolli(A.Bang(ExtReal(1), R), R), A.Lolli(A.Bang(ExtReal(2), R), R))
    j = join_types(A.Monad("ED", Grade.ed(1, 0.2), R), A.Monad("ED", Grade.ed(2, 0.1), R))
    assert j == A.Monad("ED", Grade.ed(2, 0.2), R)
    assert join_types(A.Sum(R, A.Hole()), A.Sum(A.Hole(), A.DB)) == A.Sum(R, A.DB)


def test_case_on_injection_joins_grades():
    env = {"x": A.CEIL}
    j = ty("case inl x of inl a. Gaussian[1, 0.1] a | inr b. Gaussian[2, 0.05] b", env)
    assert j.type == A.Monad("ED", Grade.ed(2, 0.1), R)


# Hand-written derivations: each entry is (term, env, usage of a valid derivation).
GOLDEN = [
    ("x + y", {"x": R, "y": R}, {"x": ExtReal(1), "y": ExtReal(1)}),
    ("<x, y>", {"x": R, "y": R}, {"x": ExtReal(1), "y": ExtReal(1)}),
    ("!{2} (x + x)", {"x": R}, {"x": ExtReal(4)}),
    ("let !z = b in z + z", {"b": A.Bang(ExtReal(4), R)}, {"b": ExtReal(1)}),
    ("pi1 <x, x + x>", {"x": R}, {"x": ExtReal(2)}),
    ("Gaussian[1, 0.1] (size db)", {"db": A.DB}, {"db": ExtReal(1)}),
    ("bind a <- Normal c; return[KL] a", {"c": A.CEIL}, {"c": INF}),
]


@pytest.mark.parametrize("src,env,golden", GOLDEN)
def test_usage_is_no_larger_than_golden(src, env, golden):
    assert ctx_leq(ty(src, env).usage, golden)
