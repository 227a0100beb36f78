"""Singular profiles, decomposition, Euler characteristic, TOML input."""
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from epsilon_rh.connection import (
    Connection, ConnectionError_, decompose, euler_char, load_toml,
    mobius_transform, profile,
)
from epsilon_rh.exactalg import INFINITY, Point, Poly, RationalFunction, parse

frac_st = st.fractions(min_value=-4, max_value=4, max_denominator=4)


@st.composite
def connection_st(draw):
    n_poles = draw(st.integers(0, 3))
    poles = draw(st.lists(frac_st, min_size=n_poles, max_size=n_poles,
                          unique=True))
    omega = RationalFunction(draw(
        st.lists(frac_st, min_size=0, max_size=3).map(Poly)))
    for p in poles:
        k = draw(st.integers(1, 4))
        coef = draw(frac_st.filter(lambda q: q != 0))
        omega = omega + RationalFunction(
            Poly.const(coef), (Poly.x() - Poly.const(p)) ** k)
    return Connection(omega)


def test_kummer_profile():
    c = Connection.from_string("1/2/z - 1")
    prof = profile(c)
    pts = {str(e.point): e for e in prof.entries}
    assert set(pts) == {"0", "oo"}
    assert pts["0"].pole_order == 1 and pts["0"].a == 1
    assert pts["0"].alpha == Fraction(1, 2)
    assert pts["oo"].pole_order == 2 and pts["oo"].a == 2
    assert euler_char(c) == 1


def test_gaussian_profile():
    c = Connection.from_string("-2*z")
    prof = profile(c)
    assert [str(e.point) for e in prof.entries] == ["oo"]
    assert prof.entries[0].pole_order == 3
    assert euler_char(c) == 1


def test_trivial_connection_rejected():
    with pytest.raises(ConnectionError_):
        euler_char(Connection.from_string("0"))


@given(connection_st())
def test_decompose_identity(c):
    dec = decompose(c)
    assert (c.omega - dec.omega_reg - dec.phi.derivative()).is_zero()
    # omega_reg has only simple poles
    for _p, mult in dec.omega_reg.finite_poles().items():
        assert mult == 1
    for d, alpha in dec.residues:
        prof = profile(c)
        assert prof.at(Point.finite(d)).alpha == alpha


@given(connection_st())
def test_euler_char_mobius_invariant(c):
    if not profile(c).entries:
        return
    m = mobius_transform(c, Fraction(0), Fraction(1), Fraction(1), Fraction(0))
    if not profile(m).entries:
        return
    assert euler_char(m) == euler_char(c)


def test_mobius_inversion_swaps_zero_and_infinity():
    c = Connection.from_string("1/2/z - 1")
    m = mobius_transform(c, Fraction(0), Fraction(1), Fraction(1), Fraction(0))
    prof = profile(m)
    assert prof.at(INFINITY).a == 1
    assert prof.at(Point.finite(Fraction(0))).a == 2


def test_load_toml(tmp_path):
    path = tmp_path / "job.toml"
    path.write_text('[connection]\nomega = "1/2/z - 1"\n[form]\nnu = "z"\n')
    job = load_toml(str(path))
    assert job.omega == parse("1/2/z - 1")
    assert job.nu == parse("z")
    bad = tmp_path / "bad.toml"
    bad.write_text('[form]\nnu = "z"\n')
    with pytest.raises(ConnectionError_):
        load_toml(str(bad))
