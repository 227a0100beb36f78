"""Period integrals: anchors, monodromy, path homotopy, stability, Kunneth."""
import cmath
import math
import random
from dataclasses import replace
from fractions import Fraction

import mpmath
import pytest

from epsilon_rh.connection import Connection
from epsilon_rh.exactalg import parse
from epsilon_rh.periods import (
    Cycle, PathSpec, Segment, build_cycles, continue_section_log, integrate,
    period_determinant, period_matrix,
)

mpmath.mp.dps = 25


def test_gamma_value_anchor():
    alpha = 0.5
    d, err = period_determinant(Connection.from_string("1/2/z - 1"))
    expected = (cmath.exp(2j * cmath.pi * alpha) - 1) * complex(
        mpmath.gamma(alpha))
    assert abs(complex(d) - expected) <= 1e-8 * abs(expected)


def test_gaussian_value_anchor():
    d, err = period_determinant(Connection.from_string("-2*z"))
    expected = math.sqrt(2 * math.pi / 2)
    assert abs(complex(d) - expected) <= 1e-8 * abs(expected)


def test_monodromy_weight():
    """A small loop at a tame point multiplies the section by e^{2 pi i alpha}."""
    c = Connection.from_string("1/3/z - 1")
    r = 0.25

    def loop(n_arcs):
        segs = tuple(
            Segment(kind="arc", center=0j, radius=r,
                    a0=k * math.pi / 2, a1=(k + 1) * math.pi / 2)
            for k in range(n_arcs))
        return PathSpec(segments=segs, label="loop")

    once = continue_section_log(c, loop(4))
    twice = continue_section_log(c, loop(8))
    ratio = complex(twice - once)
    expected = 2j * math.pi * (1 / 3)
    assert abs(ratio - expected) < 1e-10


def _perturb_cycle(cy, r, scale):
    """Split one line segment of each path by a jittered midpoint."""
    new_paths = []
    for path, w in cy.paths:
        segs = list(path.segments)
        line_ix = [i for i, s in enumerate(segs) if s.kind == "line"
                   and abs(s.end - s.start) > 4 * scale]
        if line_ix:
            i = r.choice(line_ix)
            s = segs[i]
            mid = (s.start + s.end) / 2 + complex(
                r.uniform(-scale, scale), r.uniform(-scale, scale))
            segs[i:i + 1] = [replace(s, end=mid), replace(s, start=mid)]
        new_paths.append((PathSpec(segments=tuple(segs), label=path.label), w))
    return Cycle(paths=tuple(new_paths),
                 closure_certificate=cy.closure_certificate)


@pytest.mark.parametrize("omega", ["1/2/z - 1", "1/3/z - 1"])
def test_homotopy_invariance(omega):
    c = Connection.from_string(omega)
    cy = build_cycles(c, 1)[0]
    form = parse("1")
    base, base_err = integrate(cy, form, c, 1e-10)
    r = random.Random(5)
    for _ in range(10):
        pert = _perturb_cycle(cy, r, 0.02)
        v, e = integrate(pert, form, c, 1e-10)
        assert abs(complex(v - base)) <= float(base_err + e) + 1e-12 * abs(
            complex(base))


def test_determinant_stability():
    c = Connection.from_string("2/3/z - 1")
    d1, e1 = period_determinant(c, 1e-8)
    d2, e2 = period_determinant(c, 1e-16)
    assert abs(complex(d1 - d2)) <= float(e1)


def test_kunneth_separable_gaussian():
    """2-dim Gaussian z^2 + w^2 over the product cycle = product of factors."""
    c = Connection.from_string("-2*z")
    cy = build_cycles(c, 1)[0]
    one_dim, e1 = integrate(cy, parse("1"), c, 1e-10)
    # product cycle: iterated quadrature of exp(-z^2 - w^2)
    with mpmath.workdps(25):
        two_dim = mpmath.quad(
            lambda z: mpmath.quad(
                lambda w: mpmath.exp(-z * z - w * w),
                [-mpmath.inf, mpmath.inf]),
            [-mpmath.inf, mpmath.inf])
        assert abs(two_dim - one_dim ** 2) < 1e-8
        assert abs(two_dim - mpmath.pi) < 1e-10


def test_cycles_match_rank():
    c = Connection.from_string("1/2/z - 1")
    pm = period_matrix(c)
    assert len(pm.entries) == 1 and len(pm.entries[0]) == 1
