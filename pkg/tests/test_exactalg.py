"""Ring laws, series arithmetic, residue theorem, parser round trips."""
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from epsilon_rh.exactalg import (
    INFINITY, ParseError, Point, Poly, RationalFunction, expand_at,
    form_expand_at, order, parse, rational_roots, residue, serialize,
    series_inv, series_mul, LocalSeries,
)

fractions_st = st.fractions(
    min_value=-8, max_value=8, max_denominator=6)


def poly_st(max_deg=4):
    return st.lists(fractions_st, min_size=0, max_size=max_deg + 1).map(Poly)


def ratfun_st():
    return st.tuples(poly_st(), poly_st(2), fractions_st).map(
        lambda t: RationalFunction(
            t[0], t[1] if not t[1].is_zero() else Poly.const(1))
        + RationalFunction(Poly.const(t[2])))


@given(ratfun_st(), ratfun_st(), ratfun_st())
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert a - a == RationalFunction(Poly.const(0))
    assert a + (-a) == RationalFunction(Poly.const(0))


@given(ratfun_st(), ratfun_st())
def test_field_laws(a, b):
    if not b.is_zero():
        assert (a / b) * b == a
    assert (a * b).derivative() == a.derivative() * b + a * b.derivative()


@given(poly_st(), poly_st())
def test_poly_divmod_gcd(a, b):
    if b.is_zero():
        return
    q, r = a.divmod(b)
    assert q * b + r == a
    assert r.is_zero() or r.degree < b.degree
    g = a.gcd(b)
    if not a.is_zero():
        assert a.divmod(g)[1].is_zero()
        assert b.divmod(g)[1].is_zero()


@given(st.lists(st.tuples(fractions_st, st.integers(1, 3), fractions_st),
                min_size=1, max_size=4),
       poly_st(3))
def test_residue_theorem(parts, tail):
    """Sum of all residues of f dz on the projective line vanishes."""
    f = RationalFunction(tail)
    for pole, k, coef in parts:
        f = f + RationalFunction(
            Poly.const(coef), (Poly.x() - Poly.const(pole)) ** k)
    total = Fraction(0)
    for p, _m in f.finite_poles().items():
        total += residue(form_expand_at(f, Point.finite(p), 4))
    total += residue(form_expand_at(f, INFINITY, 4))
    assert total == 0


@given(ratfun_st(), fractions_st)
def test_expansion_matches_evaluation(f, x0):
    if f.den.eval_rat(x0) == 0:
        return
    s = expand_at(f, Point.finite(x0), 6)
    assert s[0] == f.eval_rat(x0)
    # first derivative coefficient
    assert s[1] == f.derivative().eval_rat(x0)


@given(ratfun_st())
def test_parse_serialize_roundtrip(f):
    assert parse(serialize(f)) == f


def test_series_inverse_roundtrip():
    s = LocalSeries(Point.finite(Fraction(0)),
                    {0: Fraction(2), 1: Fraction(-1), 3: Fraction(5, 3)}, 6)
    inv = series_inv(s, 6)
    prod = series_mul(s, inv)
    assert prod[0] == 1
    assert all(prod[k] == 0 for k in range(1, 6))


def test_rational_roots_multiplicity():
    p = (Poly.x() - Poly.const(Fraction(1, 2))) ** 3 * (Poly.x() + Poly.const(2))
    roots = rational_roots(p)
    assert roots[Fraction(1, 2)] == 3
    assert roots[Fraction(-2)] == 1


def test_order_of_local_form():
    f = parse("1/z^3 + 1/z")
    assert order(form_expand_at(f, Point.finite(Fraction(0)), 4)) == -3
    assert order(form_expand_at(parse("z"), INFINITY, 4)) == -3


@pytest.mark.parametrize("text", ["((", "1//z", "z +", "3^^2"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)
