"""Local characters, Gauss sums, and epsilon factors at singular points.

At each point the connection induces a character lambda(g) = -Res(g * omega)
of the local jet group; its Gauss sum has a closed form in Gamma values,
Gaussians, and fiber values of the character sheaf.  Fibers are normalized by
the global flat section exp(-integral of omega) continued from a fixed anchor
with the branch rule log(-1) = +i*pi.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import exactalg, periods
from .connection import Connection, decompose, profile
from .exactalg import (INFINITY, LocalForm, LocalSeries, Point, Poly,
                       RationalFunction, form_expand_at, order)
from .lines import GradedLine, LineError, SymbolicComplex, two_pi_i_power


class LocalEpsError(Exception):
    """Invalid local character or Gauss-sum input."""


# ---------------------------------------------------------------------------
# Character data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharacterData:
    point: Point
    f: int  # conductor
    a: int  # level, f + 1
    lambda_coeffs: tuple[Fraction, ...]  # lambda(t^j), j = 0..f
    delta: Fraction  # lambda(t^f), the dual blob
    ramification: str  # unramified | tame | wild

    def dual(self) -> "CharacterData":
        lc = tuple(-x for x in self.lambda_coeffs)
        return CharacterData(self.point, self.f, self.a, lc, -self.delta,
                             self.ramification)


def character_of(c: Connection, p: Point, trunc: int = 6) -> CharacterData:
    """lambda(t^j) = -Res(t^j * omega_loc) for j = 0..f."""
    fm = c.local_form(p, trunc)
    s = fm.series
    if s.is_zero():
        m = 0
    else:
        m = max(0, -s.valuation())
    f = max(0, m - 1)
    if trunc < 1:
        raise LocalEpsError("insufficient truncation for the character jets")
    lam = tuple(-s.coeffs.get(-j - 1, Fraction(0)) for j in range(f + 1))
    delta = lam[f]
    if f > 0:
        ram = "wild"
        if delta == 0:
            raise LocalEpsError("wild character with vanishing dual blob")
    elif lam[0].denominator == 1:
        ram = "unramified"
    else:
        ram = "tame"
    return CharacterData(p, f, f + 1, lam, delta, ram)


@dataclass(frozen=True)
class GaussSumInput:
    chi: CharacterData
    nu_loc: LocalForm
    c_nu: int
    gamma_degree: int


def gauss_sum_input(chi: CharacterData, nu_loc: LocalForm) -> GaussSumInput:
    c_nu = order(nu_loc)
    return GaussSumInput(chi, nu_loc, c_nu, c_nu + chi.a)


@dataclass(frozen=True)
class FiberSpec:
    g: LocalSeries
    value: SymbolicComplex


# ---------------------------------------------------------------------------
# g_nu and g_lambda
# ---------------------------------------------------------------------------


def g_nu(inp: GaussSumInput) -> LocalSeries:
    """u * t^(-c-1) with Res(g_nu * nu) = -1."""
    if inp.chi.a != 1:
        raise LocalEpsError("g_nu applies to level a = 1 only (use g_lambda)")
    c = inp.c_nu
    lead = inp.nu_loc.series[c]
    return LocalSeries(inp.nu_loc.center, {-c - 1: Fraction(-1) / lead}, -c)


def g_lambda(inp: GaussSumInput, omega_loc: LocalForm) -> LocalSeries:
    """Truncation of omega_loc/nu_loc to exponents <= -c-1; -psi_{g nu} = lambda."""
    if inp.chi.a < 2:
        raise LocalEpsError("g_lambda applies to wild characters (use g_nu)")
    if omega_loc.center != inp.nu_loc.center:
        raise LocalEpsError("omega and nu expanded at different points")
    c = inp.c_nu
    om_val = omega_loc.series.valuation()
    inv_nu = exactalg.series_inv(inp.nu_loc.series, -c - om_val + 1)
    ratio = exactalg.series_mul(omega_loc.series, inv_nu)
    g = ratio.truncate(-c)
    if g.is_zero() or g.valuation() != -c - inp.chi.a:
        raise LocalEpsError("g_lambda valuation mismatch: expected "
                            f"{-c - inp.chi.a}")
    return g


def residue_pair(g: LocalSeries, nu_loc: LocalForm) -> Fraction:
    """Res(g * nu), exact."""
    prod = exactalg.series_mul(g, nu_loc.series)
    return prod.coeffs.get(-1, Fraction(0))


# ---------------------------------------------------------------------------
# Jet logarithm and the flat section of the character sheaf
# ---------------------------------------------------------------------------


def _jet_log(unit: LocalSeries, f: int) -> dict[int, Fraction]:
    """log(u/u0) as a jet polynomial in T, exponents 1..f."""
    u0 = unit[0]
    if u0 == 0:
        raise LocalEpsError("unit series with zero constant term")
    v = {e: c / u0 for e, c in unit.coeffs.items() if 0 < e <= f}
    out: dict[int, Fraction] = {}
    power = dict(v)
    for k in range(1, f + 1):
        sign = Fraction((-1) ** (k + 1), k)
        for e, c in power.items():
            if e <= f:
                out[e] = out.get(e, Fraction(0)) + sign * c
        # next power of v, truncated
        if k < f:
            nxt: dict[int, Fraction] = {}
            for e1, c1 in power.items():
                for e2, c2 in v.items():
                    if e1 + e2 <= f:
                        nxt[e1 + e2] = nxt.get(e1 + e2, Fraction(0)) + c1 * c2
            power = nxt
    return out


def rational_power(base: Fraction, expo: Fraction) -> SymbolicComplex:
    """base**expo with the branch rule log(-1) = +i*pi; exact where atoms allow."""
    base = Fraction(base)
    expo = Fraction(expo)
    if base == 0:
        raise LocalEpsError("zero base in rational power")
    out = SymbolicComplex.one()
    if base < 0:
        out = out.mul(SymbolicComplex.root_of_unity(expo / 2))
    m = abs(base)
    if m == 1 or expo == 0:
        return out
    if expo.denominator == 1:
        return out.mul(SymbolicComplex.from_rational(m ** expo))
    if expo.denominator == 2:
        return out.mul(SymbolicComplex.sqrt(m, expo.numerator))
    with mpmath.workdps(40):
        val = mpmath.power(mpmath.mpf(m.numerator) / m.denominator,
                           mpmath.mpf(expo.numerator) / expo.denominator)
        return out.mul(SymbolicComplex.from_numeric(complex(val),
                                                    abs(val) * 1e-35))


def s_lambda(chi: CharacterData, unit: LocalSeries) -> SymbolicComplex:
    """Flat section u0^{lambda_0} * e^{lambda(log(u/u0))} of the character sheaf."""
    u0 = unit[0]
    jl = _jet_log(unit, chi.f)
    lam_of_log = sum((chi.lambda_coeffs[j] * jl.get(j, Fraction(0))
                      for j in range(1, chi.f + 1)), Fraction(0))
    return rational_power(u0, chi.lambda_coeffs[0]).mul(
        SymbolicComplex.exp_rat(lam_of_log))


# ---------------------------------------------------------------------------
# Uniformizer line via branch transport of the global flat section
# ---------------------------------------------------------------------------


def _winding_numbers(path_segments, watch: list[complex],
                     transform=None) -> list[int]:
    """Integer windings of (z - watch_j) (or transform(z) - watch_j) along the
    path, relative to principal arguments at both ends."""
    acc = [0.0] * len(watch)
    zs: list[complex] = []
    for seg in path_segments:
        zf, _ = periods._seg_map(seg, 1.0)
        n = 32
        zs.extend(complex(zf(i / n)) for i in range(n + 1))
    if transform is not None:
        zs = [transform(z) for z in zs]
    for j, d in enumerate(watch):
        for z0, z1 in zip(zs, zs[1:]):
            acc[j] += cmath.phase((z1 - d) / (z0 - d))
    out = []
    for j, d in enumerate(watch):
        start = _pp_arg(zs[0] - d)
        end = _pp_arg(zs[-1] - d)
        out.append(round((start + acc[j] - end) / (2 * math.pi)))
    return out


def _pp_arg(z: complex) -> float:
    """Principal argument with arg(-x) = +pi for x > 0."""
    a = cmath.phase(z)
    if abs(z.imag) < 1e-300 and z.real < 0:
        return math.pi
    return a


def _phi_polar_at(phi: RationalFunction, d: Fraction) -> RationalFunction:
    """Sum of the negative-power terms of phi at the finite point d."""
    s = exactalg.expand_at(phi, Point.finite(d), 0)
    out = RationalFunction.const(0)
    zd = RationalFunction(Poly([-d, 1]))
    for e, coeff in s.coeffs.items():
        if e < 0:
            out = out + (zd ** e).scale(coeff)
    return out


def uniformizer_line(c: Connection, p: Point,
                     anchor: Fraction = Fraction(1)) -> SymbolicComplex:
    """The degree-one fiber value l_p = e^{-i pi alpha_p} * H_p(p), where H_p is
    the flat section with the local singular factors removed, branch-transported
    from the anchor."""
    prof = profile(c)
    dec = decompose(c)
    try:
        alpha_p = prof.at(p).alpha
    except KeyError:
        alpha_p = Fraction(0)
    singular = [complex(e.point.value) for e in prof.entries
                if not e.point.at_infinity]
    za = complex(Fraction(anchor))
    if any(abs(za - s) < 1e-12 for s in singular):
        raise LocalEpsError("anchor coincides with a singular point")
    clear = periods._clearance(singular) if singular else 0.125

    out = SymbolicComplex.root_of_unity(-alpha_p / 2)  # e^{-i pi alpha_p}
    others = [(d, a) for d, a in dec.residues
              if Point.finite(d) != p]
    if not p.at_infinity:
        d0 = p.value
        obstacles = [s for s in singular if abs(s - complex(d0)) > 1e-12]
        segs = periods._route(za, complex(d0), obstacles, clear)
        ks = _winding_numbers(segs, [complex(d) for d, _ in others])
        for (dj, aj), k in zip(others, ks):
            out = out.mul(rational_power(d0 - dj, -aj))
            if k:
                out = out.mul(SymbolicComplex.root_of_unity(-aj * k))
        phi_reg = dec.phi - _phi_polar_at(dec.phi, d0)
        out = out.mul(SymbolicComplex.exp_rat(-phi_reg.eval_rat(d0)))
    else:
        R = 3.0 * max([abs(s) for s in singular] + [abs(za)]) + 5.0
        segs = periods._route(za, complex(R), singular, clear)
        # track the branch of (1 - d_j w) along w = 1/z out to large radius
        acc = [0.0] * len(others)
        zs: list[complex] = []
        for seg in segs:
            zf, _ = periods._seg_map(seg, 1.0)
            n = 32
            zs.extend(complex(zf(i / n)) for i in range(n + 1))
        ws = [1.0 / z for z in zs]
        for j, (dj, aj) in enumerate(others):
            vals = [1.0 - complex(dj) * w for w in ws]
            for v0, v1 in zip(vals, vals[1:]):
                acc[j] += cmath.phase(v1 / v0)
            start = _pp_arg(vals[0])
            k = round((start + acc[j]) / (2 * math.pi))
            if k:
                out = out.mul(SymbolicComplex.root_of_unity(-aj * k))
        q, _ = dec.phi.num.divmod(dec.phi.den)
        const = q[0] if q.degree >= 0 else Fraction(0)
        out = out.mul(SymbolicComplex.exp_rat(-const))
    return out


def global_fiber(c: Connection, p: Point,
                 anchor: Fraction = Fraction(1)) -> SymbolicComplex:
    """Value at a non-singular point of the flat section exp(-int omega)
    continued from the anchor."""
    prof = profile(c)
    if any(e.point == p for e in prof.entries):
        raise LocalEpsError("global fiber requested at a singular point")
    dec = decompose(c)
    singular = [complex(e.point.value) for e in prof.entries
                if not e.point.at_infinity]
    za = complex(Fraction(anchor))
    clear = periods._clearance(singular) if singular else 0.125
    out = SymbolicComplex.one()
    if not p.at_infinity:
        x = p.value
        segs = periods._route(za, complex(x), singular, clear)
        ks = _winding_numbers(segs, [complex(d) for d, _ in dec.residues])
        for (dj, aj), k in zip(dec.residues, ks):
            out = out.mul(rational_power(x - dj, -aj))
            if k:
                out = out.mul(SymbolicComplex.root_of_unity(-aj * k))
        out = out.mul(SymbolicComplex.exp_rat(-dec.phi.eval_rat(x)))
    else:
        R = 3.0 * max([abs(s) for s in singular] + [abs(za)]) + 5.0
        segs = periods._route(za, complex(R), singular, clear)
        zs: list[complex] = []
        for seg in segs:
            zf, _ = periods._seg_map(seg, 1.0)
            n = 32
            zs.extend(complex(zf(i / n)) for i in range(n + 1))
        ws = [1.0 / z for z in zs]
        for dj, aj in dec.residues:
            vals = [1.0 - complex(dj) * w for w in ws]
            acc = 0.0
            for v0, v1 in zip(vals, vals[1:]):
                acc += cmath.phase(v1 / v0)
            k = round((_pp_arg(vals[0]) + acc) / (2 * math.pi))
            if k:
                out = out.mul(SymbolicComplex.root_of_unity(-aj * k))
        if not dec.phi.is_zero():
            q, _ = dec.phi.num.divmod(dec.phi.den)
            if q.degree >= 1:
                raise LocalEpsError("flat section has no limit at infinity")
            const = q[0] if q.degree >= 0 else Fraction(0)
            out = out.mul(SymbolicComplex.exp_rat(-const))
    return out


def fiber_value(c: Connection | None, chi: CharacterData, g: LocalSeries,
                anchor: Fraction = Fraction(1)) -> FiberSpec:
    """Canonical line value (L, B; g) = l_p^n / s_lambda(unit part of g)."""
    n = g.valuation()
    unit = g.shift_exponents(-n)
    val = s_lambda(chi, unit).inverse()
    if n != 0:
        if c is None:
            ell = SymbolicComplex.one()
        else:
            ell = uniformizer_line(c, chi.point, anchor)
        val = val.mul(ell.pow(n))
    return FiberSpec(g, val)


# ---------------------------------------------------------------------------
# Closed-form Gauss sum and epsilon factor
# ---------------------------------------------------------------------------


def tau_closed_form(inp: GaussSumInput, fiber: FiberSpec) -> GradedLine:
    """Closed form: unramified -> fiber; a = 1 -> ((e^{2 pi i d}-1) Gamma(d))^{-1}
    * fiber; a >= 2 -> e^{-Res(g nu)} * (d/2pi)^{a/2} * i^{floor(a/2)} * fiber."""
    chi = inp.chi
    if chi.ramification == "unramified":
        return GradedLine.of(fiber.value, 0)
    if chi.a == 1:
        d = chi.delta
        try:
            pref = SymbolicComplex.tame_unit(d, -1).mul(SymbolicComplex.gamma(d, -1))
        except LineError as exc:
            raise LocalEpsError(f"Gamma pole at delta = {d}: "
                                "character not generically simple") from exc
        return GradedLine.of(pref.mul(fiber.value), 0)
    a = chi.a
    d = chi.delta
    r = residue_pair(fiber.g, inp.nu_loc)
    pref = SymbolicComplex.exp_rat(-r)
    if d > 0:
        pref = pref.mul(SymbolicComplex.sqrt(d, a))
    else:
        # (sqrt(d/2pi))^a = (sqrt(|d|/2pi))^a * i^a, principal branch
        pref = pref.mul(SymbolicComplex.sqrt(-d, a)).mul(SymbolicComplex.i_pow(a))
    pref = pref.mul(SymbolicComplex.two_pi_pow(-a)).mul(SymbolicComplex.i_pow(a // 2))
    return GradedLine.of(pref.mul(fiber.value), 0)


def epsilon_factor(inp: GaussSumInput, dual_fiber: FiberSpec) -> GradedLine:
    """epsilon = (2 pi i)^{c(nu)} * tau(dual character; nu) in degree -c - a."""
    dual_inp = GaussSumInput(inp.chi.dual(), inp.nu_loc, inp.c_nu,
                             inp.gamma_degree)
    tau_d = tau_closed_form(dual_inp, dual_fiber)
    val = two_pi_i_power(inp.c_nu).mul(tau_d.value)
    return GradedLine(degree=-inp.c_nu - inp.chi.a, value=val)


# ---------------------------------------------------------------------------
# Whole-pipeline helpers and the per-point report
# ---------------------------------------------------------------------------


def local_data_at(c: Connection, p: Point, nu: RationalFunction,
                  anchor: Fraction = Fraction(1), trunc: int | None = None):
    """Character, Gauss-sum input, g, tau, and epsilon at one point."""
    chi = character_of(c, p, trunc or 8)
    depth = abs(chi.a) + 8
    nu_loc = form_expand_at(nu, p, depth)
    inp = gauss_sum_input(chi, nu_loc)
    if chi.a == 1:
        g = g_nu(inp)
    else:
        omega_loc = c.local_form(p, depth)
        g = g_lambda(inp, omega_loc)
    fib = fiber_value(c, chi, g, anchor)
    tau = tau_closed_form(inp, fib)
    # epsilon via the dual connection's fiber at the dual g
    dual_c = Connection(-c.omega)
    dual_chi = chi.dual()
    if chi.a == 1:
        dual_g = g
    else:
        dual_g = g.scale(-1)
    dual_fib = fiber_value(dual_c, dual_chi, dual_g, anchor)
    eps = epsilon_factor(inp, dual_fib)
    return chi, inp, g, fib, tau, eps


def point_report(c: Connection, p: Point, nu: RationalFunction,
                 anchor: Fraction = Fraction(1)) -> dict:
    from .lines import line_to_json
    chi, inp, g, fib, tau, eps = local_data_at(c, p, nu, anchor)
    return {
        "point": "oo" if p.at_infinity else str(p.value),
        "f": chi.f,
        "a": chi.a,
        "ramification": chi.ramification,
        "delta": str(chi.delta),
        "c_nu": inp.c_nu,
        "g": str(g),
        "tau": line_to_json(tau),
        "epsilon": line_to_json(eps),
    }
