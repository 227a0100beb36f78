"""Global rank-one connections d + omega*dz on P^1.

Computes the singular profile, the split omega = omega_reg + d(phi) into a
simple-pole part and an exponential part, and the Euler characteristic of the
twisted de Rham complex on the complement of the poles.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction

from . import exactalg
from .exactalg import (
    INFINITY,
    ExactAlgError,
    LocalForm,
    Point,
    Poly,
    RationalFunction,
    form_expand_at,
    order,
    parse,
    residue,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConnectionError_(ExactAlgError):
    """Invalid connection input or inapplicable convention."""


@dataclass(frozen=True)
class PointData:
    """Per-singular-point profile entry."""

    point: Point
    pole_order: int  # pole order of omega*dz at the point
    irregularity: int  # max(0, pole_order - 1)
    a: int  # irregularity + 1
    alpha: Fraction  # residue of omega*dz at the point


@dataclass(frozen=True)
class SingularProfile:
    entries: tuple[PointData, ...]

    def at(self, p: Point) -> PointData:
        for e in self.entries:
            if e.point == p:
                return e
        raise KeyError(f"{p} is not singular")

    def points(self) -> list[Point]:
        return [e.point for e in self.entries]


@dataclass(frozen=True)
class Decomposition:
    """omega = omega_reg + d(phi)/dz with omega_reg having simple poles only."""

    omega_reg: RationalFunction
    phi: RationalFunction
    residues: tuple[tuple[Fraction, Fraction], ...]  # (finite pole d, residue alpha_d)


@dataclass(frozen=True)
class Connection:
    """Rank-one connection d + omega*dz on P^1 minus the poles of omega*dz."""

    omega: RationalFunction

    @staticmethod
    def from_string(text: str) -> "Connection":
        return Connection(parse(text))

    def local_form(self, p: Point, target_trunc: int = 10) -> LocalForm:
        return form_expand_at(self.omega, p, target_trunc)

    def singular_points(self) -> list[Point]:
        pts: list[Point] = [Point.finite(d) for d in
                            sorted(self.omega.finite_poles())]
        f_inf = self.local_form(INFINITY, 4)
        if not f_inf.series.is_zero() and order(f_inf) < 0:
            pts.append(INFINITY)
        return pts


def profile(c: Connection) -> SingularProfile:
    entries = []
    for p in c.singular_points():
        f = c.local_form(p, 2)
        m = -order(f)
        entries.append(PointData(
            point=p,
            pole_order=m,
            irregularity=max(0, m - 1),
            a=max(0, m - 1) + 1,
            alpha=residue(f),
        ))
    return SingularProfile(tuple(entries))


def decompose(c: Connection) -> Decomposition:
    """Split omega into the simple-pole part and an exact part d(phi)/dz.

    Polar parts of order >= 2 at finite poles integrate termwise, as does the
    polynomial part; simple poles stay in omega_reg.  The identity
    omega = omega_reg + phi' is verified exactly.
    """
    omega = c.omega
    poles = omega.finite_poles()
    omega_reg = RationalFunction.const(0)
    phi = RationalFunction.const(0)
    residues = []
    for d, mult in sorted(poles.items()):
        s = exactalg.expand_at(omega, Point.finite(d), 0)
        zd = RationalFunction(Poly([-d, 1]))
        for e, coeff in sorted(s.coeffs.items()):
            if e >= 0:
                continue
            k = -e
            if k == 1:
                omega_reg = omega_reg + (zd ** -1).scale(coeff)
                residues.append((d, coeff))
            else:
                # c*(z-d)^(-k) integrates to -c/((k-1)(z-d)^(k-1))
                phi = phi + (zd ** (-(k - 1))).scale(Fraction(-coeff, k - 1))
    # polynomial part
    q, _ = omega.num.divmod(omega.den)
    poly_int = Poly([Fraction(0)] + [c_ / (i + 1) for i, c_ in enumerate(q.coeffs)])
    phi = phi + RationalFunction(poly_int)
    check = omega - omega_reg - phi.derivative()
    if not check.is_zero():
        raise ConnectionError_("decomposition failed to verify")
    return Decomposition(omega_reg, phi, tuple(residues))


def euler_char(c: Connection) -> int:
    prof = profile(c)
    if not prof.entries:
        raise ConnectionError_("connection extends to all of P^1; chi convention inapplicable")
    return -2 + sum(e.a for e in prof.entries)


def mobius_transform(c: Connection, a: Fraction, b: Fraction,
                     cc: Fraction, d: Fraction) -> Connection:
    """Pull back omega*dz under z = (a*w + b)/(c*w + d); ad - bc must be nonzero."""
    if a * d - b * cc == 0:
        raise ConnectionError_("degenerate Moebius map")
    num = RationalFunction(Poly([b, a]))
    den = RationalFunction(Poly([d, cc]))
    m = num / den
    return Connection(c.omega.compose(m) * m.derivative())


# ---------------------------------------------------------------------------
# TOML config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JobInput:
    omega: RationalFunction
    nu: RationalFunction


def load_toml(path: str) -> JobInput:
    """Read `[connection] omega = "..."` and optional `[form] nu = "..."`."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    try:
        omega_text = data["connection"]["omega"]
    except KeyError as exc:
        raise ConnectionError_("missing [connection] omega entry") from exc
    nu_text = data.get("form", {}).get("nu", "1")
    return JobInput(parse(omega_text), parse(nu_text))
