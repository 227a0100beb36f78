"""Symbolic value algebra: group laws, twist additivity, serialization."""
import cmath
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from epsilon_rh.lines import (
    GradedLine, LineError, SymbolicComplex, line_from_json, line_inverse,
    line_json_dumps, line_tensor, line_to_json, rational_reconstruct,
    tate_twist, two_pi_i_power,
)

frac_st = st.fractions(min_value=-4, max_value=4, max_denominator=5)
nonint_frac_st = frac_st.filter(lambda q: q.denominator > 1)
pos_frac_st = st.fractions(min_value=Fraction(1, 5), max_value=4,
                           max_denominator=5)


@st.composite
def symbolic_st(draw):
    out = SymbolicComplex.build(
        rational=draw(frac_st.filter(lambda q: q != 0)),
        i_power=draw(st.integers(0, 3)),
        two_pi_half=draw(st.integers(-4, 4)),
        exp_rational=draw(frac_st),
        exp_two_pi_i=draw(frac_st),
    )
    g = draw(st.one_of(st.none(), pos_frac_st))
    if g is not None:
        out = out.mul(SymbolicComplex.gamma(g, draw(st.integers(-2, 2))))
    s = draw(st.one_of(st.none(), pos_frac_st))
    if s is not None:
        out = out.mul(SymbolicComplex.sqrt(s, draw(st.integers(-2, 2))))
    t = draw(st.one_of(st.none(), nonint_frac_st))
    if t is not None:
        out = out.mul(SymbolicComplex.tame_unit(t, draw(st.integers(-1, 1))))
    return out


def _close(a, b, tol=1e-25):
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(a)))


@given(symbolic_st(), symbolic_st())
def test_mul_matches_numerics(x, y):
    vx, _ = x.numeric_eval()
    vy, _ = y.numeric_eval()
    vxy, _ = x.mul(y).numeric_eval()
    assert _close(vxy, vx * vy, 1e-20)


@given(symbolic_st())
def test_inverse_cancels_exactly(x):
    prod = x.mul(x.inverse())
    assert prod.is_exact()
    v, err = prod.numeric_eval()
    assert _close(v, 1)


@given(symbolic_st(), st.integers(-3, 3))
def test_pow_consistency(x, n):
    vx, _ = x.numeric_eval()
    vp, _ = x.pow(n).numeric_eval()
    assert _close(vp, complex(vx) ** n, 1e-12)


@given(symbolic_st())
def test_m_unit_split(x):
    core, units = x.without_m_units()
    v, _ = x.numeric_eval()
    vc, _ = core.numeric_eval()
    vu, _ = units.numeric_eval()
    assert _close(v, complex(vc) * complex(vu), 1e-12)
    assert units.two_pi_half == 0 and units.gammas == ()


@given(st.integers(-5, 5), st.integers(-5, 5))
def test_two_pi_i_additivity(m, n):
    lhs = two_pi_i_power(m).mul(two_pi_i_power(n))
    rhs = two_pi_i_power(m + n)
    assert lhs == rhs


@given(symbolic_st(), symbolic_st(), st.integers(-3, 3),
       st.integers(-2, 2), st.integers(-2, 2))
def test_graded_line_laws(x, y, n, d1, d2):
    a = GradedLine.of(x, d1)
    b = GradedLine.of(y, d2)
    t = line_tensor(a, b)
    assert t.degree == d1 + d2
    tw = tate_twist(a, n)
    assert tw.degree == d1
    v, _ = tw.value.numeric_eval()
    va, _ = a.value.numeric_eval()
    assert _close(v, complex(va) * (2j * cmath.pi) ** (-n), 1e-12)
    inv = line_inverse(a)
    assert inv.degree == -d1
    unit = line_tensor(a, inv)
    vu, _ = unit.value.numeric_eval()
    assert _close(vu, 1)


def test_gamma_pole_raises():
    with pytest.raises(LineError):
        SymbolicComplex.gamma(0)
    with pytest.raises(LineError):
        SymbolicComplex.tame_unit(2)


def test_gamma_shift_normalization():
    # Gamma(7/2) = (5/2)(3/2)(1/2) Gamma(1/2)
    a = SymbolicComplex.gamma(Fraction(7, 2))
    b = SymbolicComplex.from_rational(Fraction(15, 8)).mul(
        SymbolicComplex.gamma(Fraction(1, 2)))
    assert a == b


@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=1000))
def test_rational_reconstruct_roundtrip(q):
    got = rational_reconstruct(complex(float(q)), 1000, 1e-8)
    assert got == q


def test_rational_reconstruct_rejects():
    assert rational_reconstruct(0.5 + 0.1j, 1000, 1e-8) is None
    assert rational_reconstruct(cmath.pi, 10, 1e-8) is None


@given(symbolic_st(), st.integers(-3, 3))
def test_line_json_roundtrip(x, d):
    a = GradedLine.of(x, d)
    back = line_from_json(line_to_json(a))
    assert back.degree == a.degree
    v1, _ = a.value.numeric_eval()
    v2, _ = back.value.numeric_eval()
    assert _close(v1, v2, 1e-18)
    assert line_json_dumps(a) == line_json_dumps(back)
