"""Rapid-decay period integrals of rank-one connections on P^1.

Cycles are piecewise paths (lines, arcs, truncated rays) carrying the dual
flat section prod (z-d)^{alpha_d} * e^{phi}, continued with explicit branch
tracking.  Keyhole loops handle tame points, rays into decay sectors handle a
wild point at infinity, and Pochhammer commutator loops handle the all-tame
case.  A finite wild point is moved to infinity by a Moebius substitution
before integrating.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from . import derham
from .connection import Connection, decompose, mobius_transform, profile
from .exactalg import INFINITY, Point, Poly, RationalFunction


class PeriodError(Exception):
    """Unsupported cycle topology or integration failure."""


# ---------------------------------------------------------------------------
# Path geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One piece of a path.

    kind "line": start -> end.
    kind "arc": center + radius*e^{i theta}, theta from a0 to a1 (radians).
    kind "ray_in": from anchor + T*e^{i angle} in to anchor (T set at
    integration time); kind "ray_out" is the reverse.
    """

    kind: str
    start: complex = 0j
    end: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    a0: float = 0.0
    a1: float = 0.0
    anchor: complex = 0j
    angle: float = 0.0

    def endpoints(self, T: float = 1.0) -> tuple[complex, complex]:
        if self.kind == "line":
            return self.start, self.end
        if self.kind == "arc":
            return (self.center + self.radius * cmath.exp(1j * self.a0),
                    self.center + self.radius * cmath.exp(1j * self.a1))
        far = self.anchor + T * cmath.exp(1j * self.angle)
        if self.kind == "ray_in":
            return far, self.anchor
        if self.kind == "ray_out":
            return self.anchor, far
        raise PeriodError(f"unknown segment kind {self.kind}")


@dataclass(frozen=True)
class PathSpec:
    """Connected chain of segments with branch state continued from the start."""

    segments: tuple[Segment, ...]
    label: str = ""

    def start_point(self, T: float = 1.0) -> complex:
        return self.segments[0].endpoints(T)[0]


@dataclass(frozen=True)
class Cycle:
    """Weighted paths whose boundary terms cancel or decay."""

    paths: tuple[tuple[PathSpec, complex], ...]
    closure_certificate: str = ""


def cycle_to_json(cy: Cycle) -> dict:
    def seg_json(s: Segment) -> dict:
        d = {"kind": s.kind}
        if s.kind == "line":
            d["start"] = [s.start.real, s.start.imag]
            d["end"] = [s.end.real, s.end.imag]
        elif s.kind == "arc":
            d["center"] = [s.center.real, s.center.imag]
            d["radius"] = s.radius
            d["angles"] = [s.a0, s.a1]
        else:
            d["anchor"] = [s.anchor.real, s.anchor.imag]
            d["angle"] = s.angle
        return d

    return {
        "closure_certificate": cy.closure_certificate,
        "paths": [
            {
                "label": p.label,
                "weight": [complex(w).real, complex(w).imag],
                "segments": [seg_json(s) for s in p.segments],
            }
            for p, w in cy.paths
        ],
    }


# ---------------------------------------------------------------------------
# The dual flat section and its logarithm along a path
# ---------------------------------------------------------------------------


class _SectionData:
    """Residues and exponential part of the dual section prod (z-d)^a * e^phi."""

    def __init__(self, c: Connection):
        dec = decompose(c)
        self.residues = [(complex(d), a) for d, a in dec.residues]
        self.phi = dec.phi
        self.finite_singular = [complex(d) for d in sorted(c.omega.finite_poles())]

    def phi_mpc(self, z) -> "mpmath.mpc":
        return self.phi.eval_mpc(z)

    def log_at(self, z) -> "mpmath.mpc":
        """Principal-branch log of the section at z (used at path starts)."""
        acc = mpmath.mpc(0)
        for d, a in self.residues:
            acc += mpmath.mpf(a.numerator) / a.denominator * mpmath.log(mpmath.mpc(z) - d)
        return acc + self.phi_mpc(z)


def _seg_map(seg: Segment, T: float):
    """Return z(s), z'(s) for s in [0, 1]."""
    if seg.kind == "line":
        z0, z1 = seg.start, seg.end
        return (lambda s: mpmath.mpc(z0) + s * (mpmath.mpc(z1) - z0),
                lambda s: mpmath.mpc(z1) - z0)
    if seg.kind == "arc":
        c0, r, a0, a1 = seg.center, seg.radius, seg.a0, seg.a1
        return (lambda s: mpmath.mpc(c0) + r * mpmath.exp(1j * (a0 + s * (a1 - a0))),
                lambda s: r * 1j * (a1 - a0) * mpmath.exp(1j * (a0 + s * (a1 - a0))))
    if seg.kind == "ray_in":
        z0 = seg.anchor + T * cmath.exp(1j * seg.angle)
        z1 = seg.anchor
        return (lambda s: mpmath.mpc(z0) + s * (mpmath.mpc(z1) - z0),
                lambda s: mpmath.mpc(z1) - z0)
    if seg.kind == "ray_out":
        z0 = seg.anchor
        z1 = seg.anchor + T * cmath.exp(1j * seg.angle)
        return (lambda s: mpmath.mpc(z0) + s * (mpmath.mpc(z1) - z0),
                lambda s: mpmath.mpc(z1) - z0)
    raise PeriodError(f"unknown segment kind {seg.kind}")


def _seg_log(sec: _SectionData, seg: Segment, T: float, log0):
    """Continuous log of the section along the segment, anchored at log0.

    Line segments subtend < pi at every off-segment point, so the principal
    branch of the endpoint ratio is the continuous one; arcs are emitted with
    span <= pi/2 which gives the same bound for non-center points, and the
    center point's argument advances exactly with the arc angle.
    """
    zf, _ = _seg_map(seg, T)
    z0 = zf(0)
    phi0 = sec.phi_mpc(z0)

    def L(s):
        z = zf(s)
        acc = mpmath.mpc(log0) - phi0 + sec.phi_mpc(z)
        for d, a in sec.residues:
            af = mpmath.mpf(a.numerator) / a.denominator
            if seg.kind == "arc" and abs(seg.center - d) < 1e-12 * max(1.0, abs(d)):
                acc += af * 1j * (seg.a1 - seg.a0) * s
            else:
                acc += af * mpmath.log((z - d) / (z0 - d))
        return acc

    return zf, L


def continue_section_log(c: Connection, path: PathSpec, T: float = 1.0):
    """Log of the dual section at the end of the path, continued from a
    principal-branch start; used for monodromy and closure checks."""
    sec = _SectionData(c)
    log0 = sec.log_at(path.start_point(T))
    for seg in path.segments:
        zf, L = _seg_log(sec, seg, T, log0)
        log0 = L(1)
    return log0


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------


def _min_pairwise(points: list[complex]) -> float:
    best = math.inf
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            best = min(best, abs(p - q))
    return best if best < math.inf else 1.0


def _clearance(points: list[complex]) -> float:
    return min(1.0, _min_pairwise(points)) / 8.0


def _dist_point_segment(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    if ab == 0:
        return abs(p - a)
    t = ((p - a) * ab.conjugate()).real / abs(ab) ** 2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * ab))


def _dist_point_ray(p: complex, anchor: complex, angle: float) -> float:
    d = cmath.exp(1j * angle)
    t = ((p - anchor) * d.conjugate()).real
    t = max(0.0, t)
    return abs(p - (anchor + t * d))


def _quarter_arcs(center: complex, radius: float, a0: float, a1: float) -> list[Segment]:
    n = max(1, int(math.ceil(abs(a1 - a0) / (math.pi / 2) - 1e-9)))
    out = []
    for k in range(n):
        t0 = a0 + (a1 - a0) * k / n
        t1 = a0 + (a1 - a0) * (k + 1) / n
        out.append(Segment("arc", center=center, radius=radius, a0=t0, a1=t1))
    return out


def _route(a: complex, b: complex, obstacles: list[complex], clear: float,
           depth: int = 0) -> list[Segment]:
    """Line from a to b, detouring around obstacles by arcs of radius ~clear."""
    if depth > 8:
        raise PeriodError("path routing failed: too many obstacles")
    for p in obstacles:
        if abs(p - a) < 1e-12 or abs(p - b) < 1e-12:
            raise PeriodError("path endpoint coincides with a singular point")
        if _dist_point_segment(p, a, b) < clear:
            r = 1.5 * clear
            ab = (b - a) / abs(b - a)
            t = ((p - a) * ab.conjugate()).real
            foot = a + t * ab
            side = 1j * ab if ((p - a) * ab.conjugate()).imag <= 0 else -1j * ab
            off = math.sqrt(max(r * r - abs(p - foot) ** 2, (0.5 * clear) ** 2))
            enter = foot - off * ab
            leave = foot + off * ab
            e1 = p + r * (enter - p) / abs(enter - p)
            e2 = p + r * (leave - p) / abs(leave - p)
            t0 = cmath.phase(e1 - p)
            t1 = cmath.phase(e2 - p)
            # sweep on the chosen side
            if (side * 1 / ab).real >= 0:
                while t1 <= t0:
                    t1 += 2 * math.pi
            else:
                while t1 >= t0:
                    t1 -= 2 * math.pi
            segs = _route(a, e1, [q for q in obstacles if q != p], clear, depth + 1)
            segs += _quarter_arcs(p, r, t0, t1)
            segs += _route(e2, b, [q for q in obstacles if q != p], clear, depth + 1)
            return segs
    return [Segment("line", start=a, end=b)]


# ---------------------------------------------------------------------------
# Cycle construction
# ---------------------------------------------------------------------------


def _decay_directions_at_infinity(phi: RationalFunction) -> list[float]:
    """Ray directions theta with Re(phi) -> -infinity, one per sector."""
    q, _ = phi.num.divmod(phi.den)
    m = q.degree
    if m < 1:
        raise PeriodError("no decay sectors at infinity")
    lead = complex(q.coeffs[-1])
    arg_c = cmath.phase(lead)
    return sorted(((math.pi - arg_c + 2 * math.pi * k) / m) % (2 * math.pi)
                  for k in range(m))


def _keyhole(t: complex, theta: float, radius: float) -> PathSpec:
    """Ray in from infinity at angle theta, full CCW circle around t, ray out."""
    p = t + radius * cmath.exp(1j * theta)
    segs = [Segment("ray_in", anchor=p, angle=theta)]
    segs += _quarter_arcs(t, radius, theta, theta + 2 * math.pi)
    segs += [Segment("ray_out", anchor=p, angle=theta)]
    return PathSpec(tuple(segs), label=f"keyhole({t:.6g})")


def _loop(base: complex, t: complex, radius: float, obstacles: list[complex],
          clear: float, sign: int) -> list[Segment]:
    """Loop from base around t (CCW if sign=+1) and back, as segments."""
    direction = cmath.phase(base - t)
    near = t + radius * cmath.exp(1j * direction)
    segs = _route(base, near, [q for q in obstacles if abs(q - t) > 1e-12], clear)
    segs += _quarter_arcs(t, radius, direction, direction + sign * 2 * math.pi)
    segs += _route(near, base, [q for q in obstacles if abs(q - t) > 1e-12], clear)
    return segs


def _reverse_segment(s: Segment) -> Segment:
    if s.kind == "line":
        return Segment("line", start=s.end, end=s.start)
    if s.kind == "arc":
        return Segment("arc", center=s.center, radius=s.radius, a0=s.a1, a1=s.a0)
    raise PeriodError("cannot reverse a ray segment")


def _pochhammer(t1: complex, t2: complex, radius: float, obstacles: list[complex],
                clear: float) -> PathSpec:
    """Commutator loop A B A^-1 B^-1 around t1 and t2; closed since the
    monodromy is abelian, with a nonzero pairing for non-integral residues."""
    base = (t1 + t2) / 2
    for p in obstacles:
        if abs(p - base) < clear:
            base = base + 2j * clear
    A = _loop(base, t1, radius, obstacles, clear, +1)
    B = _loop(base, t2, radius, obstacles, clear, +1)
    Ainv = [_reverse_segment(s) for s in reversed(A)]
    Binv = [_reverse_segment(s) for s in reversed(B)]
    return PathSpec(tuple(A + B + Ainv + Binv),
                    label=f"pochhammer({t1:.6g},{t2:.6g})")


def build_cycles(c: Connection, basis_size: int) -> list[Cycle]:
    """Rapid-decay cycle basis.

    Supported topologies: all singular points tame, or exactly one wild point
    (moved to infinity beforehand if finite; see period_determinant).
    """
    prof = profile(c)
    dec = decompose(c)
    wild = [e for e in prof.entries if e.a >= 2]
    tame_finite = [complex(e.point.value) for e in prof.entries
                   if e.a == 1 and not e.point.at_infinity]
    all_singular = [complex(e.point.value) for e in prof.entries
                    if not e.point.at_infinity]
    clear = _clearance(all_singular) if all_singular else 0.125
    radius = clear

    cycles: list[Cycle] = []
    if not wild:
        # all tame: Pochhammer commutators of consecutive finite points
        pts = sorted(tame_finite, key=lambda z: (z.real, z.imag))
        pairs = list(zip(pts, pts[1:]))
        if len(pairs) < basis_size:
            raise PeriodError("unimplemented cycle topology: "
                              "not enough tame pairs for the homology rank")
        for t1, t2 in pairs[:basis_size]:
            path = _pochhammer(t1, t2, radius, all_singular, clear)
            cycles.append(Cycle(((path, 1.0 + 0j),),
                                "compact loop; net winding zero at every "
                                "singular point, monodromy trivial"))
    elif len(wild) == 1 and wild[0].point.at_infinity:
        thetas = _decay_directions_at_infinity(dec.phi)
        m = len(thetas)
        cert = ("unbounded rays enter sectors where Re(phi) -> -inf, "
                "so the section decays superexponentially")
        for t in sorted(tame_finite, key=lambda z: (z.real, z.imag)):
            theta = _escape_angle(t, thetas, all_singular, clear)
            cycles.append(Cycle(((_keyhole(t, theta, radius), 1.0 + 0j),), cert))
        # connectors between adjacent decay sectors
        hub = _hub_point(all_singular, clear)
        for j in range(m - 1):
            th0, th1 = thetas[j], thetas[j + 1]
            a0 = hub + clear * cmath.exp(1j * th0)
            a1 = hub + clear * cmath.exp(1j * th1)
            # oriented from the higher sector into the lower one, so that for
            # the Gaussian the connector is the real line run left to right
            segs = [Segment("ray_in", anchor=a1, angle=th1)]
            segs += _route(a1, a0, all_singular, clear)
            segs += [Segment("ray_out", anchor=a0, angle=th0)]
            cycles.append(Cycle(((PathSpec(tuple(segs),
                                           label=f"connector({j},{j+1})"), 1.0 + 0j),),
                                cert))
    else:
        raise PeriodError("unimplemented cycle topology: "
                          "more than one wild point (or a finite wild point "
                          "alongside a singular point at infinity)")

    if len(cycles) != basis_size:
        raise PeriodError(
            f"unimplemented cycle topology: built {len(cycles)} cycles "
            f"for homology rank {basis_size}")
    return cycles


def _escape_angle(t: complex, thetas: list[float], obstacles: list[complex],
                  clear: float) -> float:
    """Decay direction whose escape ray from t keeps clearance."""
    m = len(thetas)
    width = 2 * math.pi / m
    for theta in thetas:
        for k in range(9):
            cand = theta + (-1) ** k * (k // 2) * width / 10
            ok = all(abs(p - t) < 1e-12 or
                     _dist_point_ray(p, t + clear * cmath.exp(1j * cand), cand) >= clear
                     for p in obstacles)
            if ok:
                return cand % (2 * math.pi)
    raise PeriodError("no clear escape ray into a decay sector")


def _hub_point(obstacles: list[complex], clear: float) -> complex:
    for cand in [0j, 1j * clear * 4, -1j * clear * 4, 0.5 + 0.5j, -0.7 - 0.3j]:
        if all(abs(p - cand) >= 2 * clear for p in obstacles):
            return cand
    raise PeriodError("no clear hub point for sector connectors")


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _ray_truncation(sec: _SectionData, form: RationalFunction, seg: Segment,
                    tol: float) -> float:
    """Length T where the decaying integrand drops below tol/1000."""
    cut = tol * 1e-3
    T = 8.0
    for _ in range(60):
        z = seg.anchor + T * cmath.exp(1j * seg.angle)
        mag = mpmath.exp(mpmath.re(sec.log_at(z))) * abs(form.eval_mpc(z))
        if mag < cut:
            return T
        T *= 1.6
    raise PeriodError("requested precision unreachable: ray integrand "
                      "does not decay below threshold")


def integrate(cy: Cycle, form: RationalFunction, c: Connection,
              precision: float = 1e-10):
    """Integral of the dual section times form*dz over the cycle.

    Returns (value, error_bound) as mpmath numbers; adaptive per-segment
    quadrature with truncated rays contributing a remainder bound.
    """
    digits = max(15, int(-math.log10(precision)) + 8)
    with mpmath.workdps(digits):
        sec = _SectionData(c)
        total = mpmath.mpc(0)
        err_total = mpmath.mpf(0)
        for path, weight in cy.paths:
            Ts = {}
            for seg in path.segments:
                if seg.kind in ("ray_in", "ray_out"):
                    Ts[id(seg)] = _ray_truncation(sec, form, seg, precision)
            T_for = lambda s: Ts.get(id(s), 1.0)
            log0 = sec.log_at(path.start_point(T_for(path.segments[0])))
            val = mpmath.mpc(0)
            err = mpmath.mpf(0)
            for seg in path.segments:
                T = T_for(seg)
                zf, L = _seg_log(sec, seg, T, log0)
                _, dz = _seg_map(seg, T)

                def F(s):
                    z = zf(s)
                    return mpmath.exp(L(s)) * form.eval_mpc(z) * dz(s)

                if seg.kind in ("ray_in", "ray_out"):
                    # grade points toward the far end of the ray
                    pts = sorted({0, 1, min(1.0, 2.0 / T), min(1.0, 8.0 / T),
                                  min(1.0, 24.0 / T)})
                    v, e = mpmath.quad(F, pts, error=True, maxdegree=8)
                    z_far = seg.anchor + T * cmath.exp(1j * seg.angle)
                    tail = mpmath.exp(mpmath.re(sec.log_at(z_far)))
                    tail *= abs(form.eval_mpc(z_far)) * 2
                    e = e + tail
                else:
                    v, e = mpmath.quad(F, [0, 1], error=True, maxdegree=8)
                val += v
                err += e
                log0 = L(1)
            total += mpmath.mpc(weight) * val
            err_total += abs(mpmath.mpc(weight)) * err
        return total, err_total


# ---------------------------------------------------------------------------
# Period matrix and determinant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodMatrix:
    entries: tuple[tuple[complex, ...], ...]
    errors: tuple[tuple[float, ...], ...]
    cycles: tuple[Cycle, ...]
    forms: tuple[RationalFunction, ...]


def _reduce_to_infinity(c: Connection, forms: list[RationalFunction]):
    """If the unique wild point is finite, substitute z = w + 1/u so it moves
    to infinity; forms pull back with the Jacobian."""
    prof = profile(c)
    wild = [e for e in prof.entries if e.a >= 2]
    if len(wild) != 1 or wild[0].point.at_infinity:
        return c, forms
    w = Fraction(wild[0].point.value)
    # substitute z = (w*u + 1)/u = w + 1/u; the wild point goes to u = infinity
    c2 = mobius_transform(c, w, Fraction(1), Fraction(1), Fraction(0))
    m = RationalFunction(Poly([Fraction(1)]), Poly([Fraction(0), Fraction(1)]))
    m = m + RationalFunction.const(w)
    new_forms = [f.compose(m) * m.derivative() for f in forms]
    return c2, new_forms


def period_matrix(c: Connection, precision: float = 1e-10) -> PeriodMatrix:
    coh = derham.cohomology(c)
    if coh.h0_dim != 0:
        raise PeriodError("determinant line requires H^0 handling, out of scope")
    forms = list(coh.h1_basis)
    c2, forms = _reduce_to_infinity(c, forms)
    cycles = build_cycles(c2, coh.h1_dim)
    entries = []
    errors = []
    for cy in cycles:
        row_v, row_e = [], []
        for f in forms:
            v, e = integrate(cy, f, c2, precision)
            row_v.append(complex(v))
            row_e.append(float(e))
        entries.append(tuple(row_v))
        errors.append(tuple(row_e))
    return PeriodMatrix(tuple(entries), tuple(errors), tuple(cycles), tuple(forms))


def _det_with_error(entries, errors):
    n = len(entries)
    M = mpmath.matrix([[mpmath.mpc(x) for x in row] for row in entries])
    d = mpmath.det(M)
    err = mpmath.mpf(0)
    for i in range(n):
        for j in range(n):
            if n == 1:
                cof = mpmath.mpf(1)
            else:
                minor = [[entries[r][s] for s in range(n) if s != j]
                         for r in range(n) if r != i]
                cof = abs(mpmath.det(mpmath.matrix(minor)))
            err += cof * errors[i][j]
    return d, err


def period_determinant(c: Connection, precision: float = 1e-10):
    """Determinant of the rapid-decay pairing matrix; (value, error_bound)."""
    digits = max(15, int(-math.log10(precision)) + 8)
    with mpmath.workdps(digits):
        pm = period_matrix(c, precision)
        if not pm.entries:
            raise PeriodError("cohomology is zero-dimensional: no period "
                              "matrix to pair against")
        d, err = _det_with_error(pm.entries, pm.errors)
        if abs(d) <= 10 * err:
            raise PeriodError("period matrix numerically singular: determinant "
                              "not bounded away from zero by its error estimate")
        return d, err
