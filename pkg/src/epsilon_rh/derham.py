"""Algebraic de Rham cohomology of a rank-one connection on P^1 minus its poles.

Pole-order reduction against exact forms d(u) + u*omega*dz produces explicit
certificates; dimensions and the canonical H^1 basis come from exact linear
algebra over Q.  Twisted forms are carried as their coefficient functions
(f stands for the form f*dz).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exactalg
from .connection import Connection, ConnectionError_, decompose, profile
from .exactalg import INFINITY, Point, Poly, RationalFunction


class DerhamError(Exception):
    """Reduction or cohomology failure."""


def _E(u: RationalFunction, omega: RationalFunction) -> RationalFunction:
    """The exact twisted form d(u) + u*omega*dz, as a coefficient function."""
    return u.derivative() + u * omega


def _polar_coeff(f: RationalFunction, d: Fraction, k: int) -> Fraction:
    """Coefficient of (z-d)^(-k) in the expansion of f at d."""
    s = exactalg.expand_at(f, Point.finite(d), 0)
    return s.coeffs.get(-k, Fraction(0))


def _pole_top(f: RationalFunction, d: Fraction) -> tuple[int, Fraction]:
    """Pole order m of f at d and the coefficient of (z-d)^(-m), by exact division."""
    if f.is_zero():
        return 0, Fraction(0)
    lin = Poly([-d, 1])
    g = f.den
    m = 0
    while True:
        q, rem = g.divmod(lin)
        if not rem.is_zero():
            break
        g = q
        m += 1
    if m == 0:
        return 0, Fraction(0)
    return m, f.num.eval_rat(d) / g.eval_rat(d)


class _Context:
    """Shared reduction state: representative-space bounds, enlarged on resonance."""

    def __init__(self, c: Connection):
        self.omega = c.omega
        self.prof = profile(c)
        self.dec = decompose(c)
        self.finite: list[Fraction] = []
        self.allowed: dict[Fraction, int] = {}
        self.alpha: dict[Fraction, Fraction] = {}
        self.wild: dict[Fraction, bool] = {}
        self.lead: dict[Fraction, Fraction] = {}
        self.inf_singular = False
        self.cap = -1
        self.a_inf = 0
        for e in self.prof.entries:
            if e.point.at_infinity:
                self.inf_singular = True
                self.a_inf = e.a
                self.alpha_inf = e.alpha
                self.cap = e.a - 2
            else:
                d = e.point.value
                self.finite.append(d)
                self.allowed[d] = e.a
                self.alpha[d] = e.alpha
                self.wild[d] = e.a >= 2
                if e.a >= 2:
                    self.lead[d] = _polar_coeff(self.omega, d, e.a)
        self.finite.sort()
        # resonant tame points (positive integer residue) stall the reduction at
        # order alpha + 1; that order belongs to the representative space
        for d in self.finite:
            a = self.alpha[d]
            if not self.wild[d] and a.denominator == 1 and a >= 1:
                self.allowed[d] = max(self.allowed[d], int(a) + 1)
        if self.inf_singular and self.a_inf == 1:
            a = self.alpha_inf
            if a.denominator == 1 and a >= 1:
                self.cap = max(self.cap, int(a) - 1)
        if self.inf_singular and self.a_inf >= 2:
            # leading coefficient of the polynomial part of omega
            q, _ = self.omega.num.divmod(self.omega.den)
            if q.degree != self.a_inf - 2:
                raise DerhamError("polynomial part inconsistent with pole order at infinity")
            self.inf_lead = q.coeffs[-1]

    def reduce(self, f: RationalFunction) -> tuple[RationalFunction, RationalFunction]:
        """Reduce f*dz into the representative space; returns (reduced, certificate)."""
        g = f.den
        for d in self.finite:
            lin = Poly([-d, 1])
            while True:
                q, rem = g.divmod(lin)
                if not rem.is_zero():
                    break
                g = q
        if g.degree > 0:
            raise DerhamError("form has a pole outside the singular divisor")
        cert = RationalFunction.const(0)
        while True:
            step = self._find_step(f)
            if step is None:
                return f, cert
            u, e, coeff, resonant_at = step
            if resonant_at is not None:
                d, m = resonant_at
                self.allowed[d] = max(self.allowed[d], m)
                continue
            scale = coeff / e
            f = f - _E(u, self.omega).scale(scale)
            cert = cert + u.scale(scale)

    def _find_step(self, f: RationalFunction):
        for d in self.finite:
            m, coeff = _pole_top(f, d)
            if m > self.allowed[d]:
                zd = RationalFunction(Poly([-d, 1]))
                if self.wild[d]:
                    # u = (z-d)^-(m - a_d); leading coefficient of E(u) is lead(omega)
                    u = zd ** (-(m - self._a(d)))
                    return u, self.lead[d], coeff, None
                e = self.alpha[d] - (m - 1)
                if e == 0:
                    return None, None, None, (d, m)
                u = zd ** (-(m - 1))
                return u, e, coeff, None
        q, _ = f.num.divmod(f.den)
        n = q.degree
        if n > self.cap:
            coeff = q.coeffs[-1]
            if self.inf_singular and self.a_inf >= 2:
                u = RationalFunction(Poly.x()) ** (n - (self.a_inf - 2))
                return u, self.inf_lead, coeff, None
            if self.inf_singular:
                e = Fraction(n + 1) - self.alpha_inf
                if e == 0:
                    self.cap = max(self.cap, n)
                    return self._find_step(f)
                return RationalFunction(Poly.x()) ** (n + 1), e, coeff, None
            return RationalFunction(Poly.x()) ** (n + 1), Fraction(n + 1), coeff, None
        return None

    def _a(self, d: Fraction) -> int:
        for e in self.prof.entries:
            if not e.point.at_infinity and e.point.value == d:
                return e.a
        raise KeyError(d)

    # -- representative-space coordinates -----------------------------------

    def monomials(self) -> list[tuple]:
        mons: list[tuple] = []
        for d in self.finite:
            for k in range(1, self.allowed[d] + 1):
                mons.append(("pole", d, k))
        for j in range(0, self.cap + 1):
            mons.append(("poly", j))
        return mons

    def coords(self, f: RationalFunction) -> list[Fraction]:
        """Exact coordinates of a reduced form in the monomial frame.

        Partial fractions reconstruct f exactly once the denominator factors
        completely over the known poles within the allowed orders, so checking
        that structure suffices for validity.
        """
        if f.is_zero():
            return [Fraction(0)] * len(self.monomials())
        g = f.den
        for d in self.finite:
            lin = Poly([-d, 1])
            m = 0
            while True:
                q, rem = g.divmod(lin)
                if not rem.is_zero():
                    break
                g = q
                m += 1
            if m > self.allowed[d]:
                raise DerhamError("reduced form escapes the representative space")
        if g.degree > 0:
            raise DerhamError("reduced form has a pole outside the singular divisor")
        qpoly, _ = f.num.divmod(f.den)
        if qpoly.degree > self.cap:
            raise DerhamError("reduced form escapes the representative space")
        polar = {d: exactalg.expand_at(f, Point.finite(d), 0).coeffs
                 for d in self.finite}
        vec: list[Fraction] = []
        for mon in self.monomials():
            if mon[0] == "pole":
                _, d, k = mon
                vec.append(polar[d].get(-k, Fraction(0)))
            else:
                _, j = mon
                vec.append(qpoly[j])
        return vec

    def monomial_form(self, mon: tuple) -> RationalFunction:
        if mon[0] == "pole":
            _, d, k = mon
            return RationalFunction(Poly([-d, 1])) ** (-k)
        _, j = mon
        return RationalFunction(Poly([Fraction(0)] * j + [Fraction(1)]))


@dataclass(frozen=True)
class CohomologyBasis:
    h0_dim: int
    h1_dim: int
    h1_basis: tuple[RationalFunction, ...]
    chi: int


def reduce_form(c: Connection, f: RationalFunction) -> tuple[RationalFunction, RationalFunction]:
    """Reduce the twisted form f*dz; f - reduced = u' + u*omega with u = certificate."""
    ctx = _Context(c)
    reduced, cert = ctx.reduce(f)
    check = f - reduced - _E(cert, ctx.omega)
    if not check.is_zero():
        raise DerhamError("certificate identity failed")
    return reduced, cert


def _rank_and_pivots(rows: list[list[Fraction]]) -> tuple[int, list[list[Fraction]]]:
    """Gaussian elimination over Q; returns (rank, echelon rows)."""
    ech: list[list[Fraction]] = []
    for row in rows:
        row = list(row)
        for e in ech:
            p = next(i for i, v in enumerate(e) if v != 0)
            if row[p] != 0:
                fct = row[p] / e[p]
                row = [a - fct * b for a, b in zip(row, e)]
        if any(v != 0 for v in row):
            ech.append(row)
    return len(ech), ech


def _in_span(ech: list[list[Fraction]], vec: list[Fraction]) -> bool:
    row = list(vec)
    for e in ech:
        p = next(i for i, v in enumerate(e) if v != 0)
        if row[p] != 0:
            fct = row[p] / e[p]
            row = [a - fct * b for a, b in zip(row, e)]
    return all(v == 0 for v in row)


def cohomology(c: Connection) -> CohomologyBasis:
    """Dimensions and a canonical H^1 basis by reduction plus exact linear algebra."""
    prof = profile(c)
    if not prof.entries:
        raise ConnectionError_("connection extends to all of P^1; chi convention inapplicable")
    ctx = _Context(c)
    dec = ctx.dec

    # h0 is detected symbolically: a rational flat section exists iff phi = 0 and
    # every residue is an integer (then u = prod (z-d)^(-alpha_d) works).
    all_integer = all(a.denominator == 1 for _, a in dec.residues)
    h0 = 1 if dec.phi.num.is_zero() and all_integer else 0

    # relation generators: reductions of exact forms E(u) over a spanning set of u
    u_list: list[RationalFunction] = [RationalFunction.const(1)]
    for d in ctx.finite:
        bound = ctx.allowed[d] + 3
        a_d = ctx.alpha[d]
        if not ctx.wild[d] and a_d.denominator == 1 and a_d > 0:
            bound = max(bound, int(a_d) + 2)
        zd = RationalFunction(Poly([-d, 1]))
        for k in range(1, bound + 1):
            u_list.append(zd ** (-k))
    if ctx.inf_singular:
        bound = ctx.cap + 3
        if ctx.a_inf == 1 and ctx.alpha_inf.denominator == 1 and ctx.alpha_inf > 0:
            bound = max(bound, int(ctx.alpha_inf) + 2)
        for j in range(1, bound + 1):
            u_list.append(RationalFunction(Poly.x()) ** j)

    # repeat until no resonance enlarges the representative space mid-pass
    while True:
        snapshot = (dict(ctx.allowed), ctx.cap)
        reduced_rel = [ctx.reduce(_E(u, ctx.omega))[0] for u in u_list]
        if (ctx.allowed, ctx.cap) == snapshot:
            break
    mons = ctx.monomials()
    rel_vecs = [ctx.coords(r) for r in reduced_rel]
    rel_rank, ech = _rank_and_pivots(rel_vecs)

    # dimension of the valid representative space
    dim_rep = len(mons)
    if not ctx.inf_singular:
        dim_rep -= 1  # forms must stay regular at infinity: one residue constraint
    h1 = dim_rep - rel_rank

    # canonical basis: earliest valid spanning forms independent modulo relations
    candidates: list[RationalFunction] = []
    if ctx.inf_singular:
        candidates = [ctx.monomial_form(m) for m in mons]
    else:
        simple = [m for m in mons if m[0] == "pole" and m[2] == 1]
        others = [m for m in mons if not (m[0] == "pole" and m[2] == 1)]
        for m1, m2 in zip(simple, simple[1:]):
            candidates.append(ctx.monomial_form(m1) - ctx.monomial_form(m2))
        candidates.extend(ctx.monomial_form(m) for m in others)
    span = [list(r) for r in ech]
    basis: list[RationalFunction] = []
    for cand in candidates:
        vec = ctx.coords(cand)
        if not _in_span(span, vec):
            basis.append(cand)
            _, span = _rank_and_pivots(span + [vec])
        if len(basis) == h1:
            break
    if len(basis) != h1:
        raise DerhamError("failed to assemble an H^1 basis of the predicted dimension")
    return CohomologyBasis(h0, h1, tuple(basis), euler_char_of(prof))


def euler_char_of(prof) -> int:
    return -2 + sum(e.a for e in prof.entries)
