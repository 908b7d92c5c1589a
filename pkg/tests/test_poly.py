from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funsolve.core import Add, Const, Mul, Var
from funsolve.poly import (Poly, domain_vars, factorial_multi, format_poly, monomials_up_to,
                           parse_infix, term_to_poly)

t = Poly.var("t")


def test_arithmetic_and_normal_form():
    p = (t + 1) ** 2
    assert p == t * t + 2 * t + 1
    assert (p - p).is_zero() and not (p - p).terms
    assert p.degree() == 2 and p.coefficient((("t", 1),)) == 2


def test_zero_coefficients_absent():
    p = Poly({(("t", 1),): 0, (): 3})
    assert list(p.terms) == [()]


def test_diff():
    assert parse_infix("t^2 + 1").diff("t") == 2 * t
    assert Poly.const(5).diff("t").is_zero()
    t1, t2 = Poly.var("t1"), Poly.var("t2")
    assert (t1 * t2 * t2).diff("t2") == 2 * t1 * t2


def test_diff_against_finite_difference():
    t1, t2 = Poly.var("t1"), Poly.var("t2")
    p = t1 * t2 * t2
    d = p.diff("t2")
    x, y, h = 0.7, -1.3, 1e-6
    fd = (p.evaluate({"t1": x, "t2": y + h}, 0.0) - p.evaluate({"t1": x, "t2": y - h}, 0.0)) / (2 * h)
    assert abs(fd - d.evaluate({"t1": x, "t2": y}, 0.0)) < 1e-6


def test_subs_is_simultaneous():
    x, y = Poly.var("x"), Poly.var("y")
    assert (x + 2 * y).subs({"x": y, "y": x}) == y + 2 * x


def test_term_round_trip():
    term = Add(Mul(Var("q"), Var("q")), Const(1))
    p = term_to_poly(term)
    assert term_to_poly(p.to_term()) == p


def test_format_keeps_insertion_order():
    assert format_poly(parse_infix("t^2 + 1")) == "t^2 + 1"
    assert format_poly(parse_infix("-1/2*t + 3")) == "-1/2*t + 3"
    assert format_poly(Poly()) == "0"


def test_parse_infix_rejects_unknown_variable():
    with pytest.raises(ValueError):
        parse_infix("x + 1", ("t",))


def test_helpers():
    assert domain_vars(1) == ("t",) and domain_vars(3) == ("t1", "t2", "t3")
    assert factorial_multi((2, 3)) == 12
    assert len(monomials_up_to(("t1", "t2"), 2)) == 6


coeffs = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 5))
polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coeffs, max_size=5).map(
    lambda d: Poly({tuple((v, e) for v, e in zip(("t1", "t2"), k) if e): c for k, c in d.items()}))


@settings(max_examples=100, deadline=None)
@given(polys, polys, coeffs, coeffs)
def test_ring_laws_and_evaluation(p, q, x, y):
    env = {"t1": x, "t2": y}
    assert (p * q).evaluate(env) == p.evaluate(env) * q.evaluate(env)
    assert (p + q).evaluate(env) == p.evaluate(env) + q.evaluate(env)
    assert (p * q).diff("t1") == p.diff("t1") * q + p * q.diff("t1")
    assert parse_infix(format_poly(p), ("t1", "t2")) == p
