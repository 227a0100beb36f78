"""Computable algebra of graded line pairs.

A GradedLine is an integer degree plus a nonzero symbolic complex value.  Values
are kept as exact atom products — rational factor, power of i, half-integer
powers of 2pi, Gamma values at rational arguments, e^{q}, e^{2*pi*i*q}, square
roots of positive rationals, factors (e^{2*pi*i*q} - 1) — together with one
numeric remainder carrying an error bound.  Tensor, inverse and Tate twist are
exact; numeric evaluation is arbitrary precision via mpmath.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import mpmath

from .exactalg import Rat, RatLike


class LineError(Exception):
    """Invalid graded-line value."""


def _sqfree_split(n: int) -> tuple[int, int]:
    """n = s**2 * r with r squarefree (trial division); returns (s, r)."""
    s, r = 1, 1
    d = 2
    m = n
    while d * d <= m:
        cnt = 0
        while m % d == 0:
            m //= d
            cnt += 1
        if cnt:
            s *= d ** (cnt // 2)
            if cnt % 2:
                r *= d
        d += 1 if d == 2 else 2
        if d > 100000 and m > 1:
            # give up factoring the tail; keep it under the radical
            r *= m
            m = 1
    r *= m
    return s, r


def _is_nonpos_int(q: Fraction) -> bool:
    return q.denominator == 1 and q <= 0


@dataclass(frozen=True)
class SymbolicComplex:
    """Exact product of symbolic atoms times a numeric tail with error bound."""

    rational: Fraction = Fraction(1)
    i_power: int = 0  # 0 or 1 after canonicalization
    two_pi_half: int = 0  # power of 2*pi is two_pi_half/2
    gammas: tuple[tuple[Fraction, int], ...] = ()
    exp_rational: Fraction = Fraction(0)
    exp_two_pi_i: Fraction = Fraction(0)  # mod 1
    sqrts: tuple[tuple[Fraction, int], ...] = ()
    tame_units: tuple[tuple[Fraction, int], ...] = ()  # (e^{2 pi i q} - 1)^e, q mod 1, q != 0
    tail: complex = 1.0 + 0.0j
    tail_err: float = 0.0

    @staticmethod
    def build(rational: RatLike = 1, i_power: int = 0, two_pi_half: int = 0,
              gammas: Optional[dict] = None, exp_rational: RatLike = 0,
              exp_two_pi_i: RatLike = 0, sqrts: Optional[dict] = None,
              tame_units: Optional[dict] = None, tail: complex = 1.0,
              tail_err: float = 0.0) -> "SymbolicComplex":
        rational = Fraction(rational)
        if rational == 0:
            raise LineError("zero rational factor")
        # fold i^2 = -1
        i_power = i_power % 4
        if i_power >= 2:
            rational = -rational
            i_power -= 2
        # gammas: push arguments into (0, 1] via Gamma(x+1) = x*Gamma(x)
        gdict: dict[Fraction, int] = {}
        for arg, e in (gammas or {}).items():
            if e == 0:
                continue
            arg = Fraction(arg)
            if _is_nonpos_int(arg):
                raise LineError(f"Gamma pole at {arg}")
            while arg > 1:
                arg -= 1
                rational *= arg ** e if e > 0 else Fraction(1)
                if e < 0:
                    rational /= arg ** (-e)
            while arg <= 0:
                rational /= arg ** e if e > 0 else Fraction(1)
                if e < 0:
                    rational *= arg ** (-e)
                arg += 1
            if arg == 1:
                continue  # Gamma(1) = 1
            gdict[arg] = gdict.get(arg, 0) + e
        gdict = {a: e for a, e in gdict.items() if e != 0}
        # sqrts: positive args, extract square parts, fold even exponents
        sdict: dict[Fraction, int] = {}
        for s, e in (sqrts or {}).items():
            if e == 0:
                continue
            s = Fraction(s)
            if s <= 0:
                raise LineError("sqrt atom needs a positive argument")
            sn, rn = _sqfree_split(s.numerator)
            sd, rd = _sqfree_split(s.denominator)
            # sqrt(s) = (sn/sd) * sqrt(rn/rd); with rn/rd = rn*rd / rd^2
            core = Fraction(rn * rd)
            pref = Fraction(sn, sd * rd)
            if e > 0:
                rational *= pref ** e
            else:
                rational /= pref ** (-e)
            if core != 1:
                sdict[core] = sdict.get(core, 0) + e
        for s in list(sdict):
            e = sdict.pop(s)
            q, rem = divmod(e, 2)
            if q > 0:
                rational *= s ** q
            elif q < 0:
                rational /= s ** (-q)
            if rem:
                sdict[s] = rem
        # tame units
        tdict: dict[Fraction, int] = {}
        for q, e in (tame_units or {}).items():
            if e == 0:
                continue
            q = Fraction(q) % 1
            if q == 0:
                raise LineError("tame unit (e^{2 pi i q} - 1) vanishes for integer q")
            tdict[q] = tdict.get(q, 0) + e
        tdict = {q: e for q, e in tdict.items() if e != 0}
        tail = complex(tail)
        if tail == 0:
            raise LineError("zero numeric tail")
        return SymbolicComplex(
            rational=rational,
            i_power=i_power,
            two_pi_half=int(two_pi_half),
            gammas=tuple(sorted(gdict.items())),
            exp_rational=Fraction(exp_rational),
            exp_two_pi_i=Fraction(exp_two_pi_i) % 1,
            sqrts=tuple(sorted(sdict.items())),
            tame_units=tuple(sorted(tdict.items())),
            tail=tail,
            tail_err=float(tail_err),
        )

    # -- constructors -------------------------------------------------------

    @staticmethod
    def one() -> "SymbolicComplex":
        return SymbolicComplex.build()

    @staticmethod
    def from_rational(q: RatLike) -> "SymbolicComplex":
        return SymbolicComplex.build(rational=q)

    @staticmethod
    def gamma(arg: RatLike, exponent: int = 1) -> "SymbolicComplex":
        return SymbolicComplex.build(gammas={Fraction(arg): exponent})

    @staticmethod
    def sqrt(arg: RatLike, exponent: int = 1) -> "SymbolicComplex":
        return SymbolicComplex.build(sqrts={Fraction(arg): exponent})

    @staticmethod
    def exp_rat(q: RatLike) -> "SymbolicComplex":
        return SymbolicComplex.build(exp_rational=q)

    @staticmethod
    def root_of_unity(q: RatLike) -> "SymbolicComplex":
        """e^{2 pi i q}."""
        return SymbolicComplex.build(exp_two_pi_i=q)

    @staticmethod
    def i_pow(k: int) -> "SymbolicComplex":
        return SymbolicComplex.build(i_power=k)

    @staticmethod
    def two_pi_pow(half_units: int) -> "SymbolicComplex":
        """(2 pi)^(half_units/2)."""
        return SymbolicComplex.build(two_pi_half=half_units)

    @staticmethod
    def tame_unit(q: RatLike, exponent: int = 1) -> "SymbolicComplex":
        """(e^{2 pi i q} - 1)^exponent."""
        return SymbolicComplex.build(tame_units={Fraction(q): exponent})

    @staticmethod
    def from_numeric(value: complex, err: float = 0.0) -> "SymbolicComplex":
        return SymbolicComplex.build(tail=value, tail_err=err)

    # -- algebra ------------------------------------------------------------

    def mul(self, other: "SymbolicComplex") -> "SymbolicComplex":
        rel1 = self.tail_err / abs(self.tail)
        rel2 = other.tail_err / abs(other.tail)
        tail = self.tail * other.tail
        return SymbolicComplex.build(
            rational=self.rational * other.rational,
            i_power=self.i_power + other.i_power,
            two_pi_half=self.two_pi_half + other.two_pi_half,
            gammas=_merge(self.gammas, other.gammas),
            exp_rational=self.exp_rational + other.exp_rational,
            exp_two_pi_i=self.exp_two_pi_i + other.exp_two_pi_i,
            sqrts=_merge(self.sqrts, other.sqrts),
            tame_units=_merge(self.tame_units, other.tame_units),
            tail=tail,
            tail_err=abs(tail) * (rel1 + rel2 + rel1 * rel2),
        )

    def inverse(self) -> "SymbolicComplex":
        rel = self.tail_err / abs(self.tail)
        if rel >= 0.5:
            raise LineError("numeric tail too uncertain to invert")
        tail = 1.0 / self.tail
        return SymbolicComplex.build(
            rational=(Fraction(1) / self.rational) * (-1 if self.i_power else 1),
            i_power=self.i_power,  # 1/i = -i
            two_pi_half=-self.two_pi_half,
            gammas={a: -e for a, e in self.gammas},
            exp_rational=-self.exp_rational,
            exp_two_pi_i=-self.exp_two_pi_i,
            sqrts={s: -e for s, e in self.sqrts},
            tame_units={q: -e for q, e in self.tame_units},
            tail=tail,
            tail_err=abs(tail) * rel / (1 - rel),
        )

    def pow(self, n: int) -> "SymbolicComplex":
        out = SymbolicComplex.one()
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            out = out.mul(base)
        return out

    def is_exact(self) -> bool:
        return self.tail == 1.0 + 0.0j and self.tail_err == 0.0

    def without_m_units(self) -> tuple["SymbolicComplex", "SymbolicComplex"]:
        """Split off the tracked M-unit atoms.

        Returns (core, units) with self = core * units; units collects the
        (e^{2 pi i q} - 1) factors and the pure phase e^{2 pi i q}.
        """
        units = SymbolicComplex.build(exp_two_pi_i=self.exp_two_pi_i,
                                      tame_units=dict(self.tame_units))
        core = SymbolicComplex.build(
            rational=self.rational, i_power=self.i_power, two_pi_half=self.two_pi_half,
            gammas=dict(self.gammas), exp_rational=self.exp_rational,
            sqrts=dict(self.sqrts), tail=self.tail, tail_err=self.tail_err)
        return core, units

    # -- numerics -----------------------------------------------------------

    def numeric_eval(self, precision_bits: int = 200) -> tuple[mpmath.mpc, float]:
        """Evaluate to an mpmath complex with a heuristic error bound."""
        if precision_bits < 53:
            raise LineError("precision_bits must be at least 53")
        with mpmath.workprec(precision_bits + 30):
            val = mpmath.mpc(self.rational.numerator) / self.rational.denominator
            if self.i_power:
                val *= mpmath.mpc(0, 1)
            if self.two_pi_half:
                val *= (2 * mpmath.pi) ** (mpmath.mpf(self.two_pi_half) / 2)
            n_atoms = 2
            for arg, e in self.gammas:
                val *= mpmath.gamma(mpmath.mpf(arg.numerator) / arg.denominator) ** e
                n_atoms += 1
            if self.exp_rational:
                val *= mpmath.e ** (mpmath.mpf(self.exp_rational.numerator)
                                    / self.exp_rational.denominator)
                n_atoms += 1
            if self.exp_two_pi_i:
                q = mpmath.mpf(self.exp_two_pi_i.numerator) / self.exp_two_pi_i.denominator
                val *= mpmath.exp(2j * mpmath.pi * q)
                n_atoms += 1
            for s, e in self.sqrts:
                val *= mpmath.sqrt(mpmath.mpf(s.numerator) / s.denominator) ** e
                n_atoms += 1
            for q, e in self.tame_units:
                qq = mpmath.mpf(q.numerator) / q.denominator
                val *= (mpmath.exp(2j * mpmath.pi * qq) - 1) ** e
                n_atoms += 2
            rel_tail = self.tail_err / abs(self.tail)
            val *= mpmath.mpc(self.tail)
            err = abs(val) * ((n_atoms + 4) * mpmath.mpf(2) ** (-precision_bits) + rel_tail)
            return mpmath.mpc(val), float(err)

    def __str__(self) -> str:
        parts = []
        if self.rational != 1:
            parts.append(str(self.rational))
        if self.i_power:
            parts.append("i")
        if self.two_pi_half:
            parts.append(f"(2pi)^({Fraction(self.two_pi_half, 2)})")
        for a, e in self.gammas:
            parts.append(f"Gamma({a})" + (f"^{e}" if e != 1 else ""))
        if self.exp_rational:
            parts.append(f"e^({self.exp_rational})")
        if self.exp_two_pi_i:
            parts.append(f"e^(2pi*i*{self.exp_two_pi_i})")
        for s, e in self.sqrts:
            parts.append(f"sqrt({s})" + (f"^{e}" if e != 1 else ""))
        for q, e in self.tame_units:
            parts.append(f"(e^(2pi*i*{q})-1)" + (f"^{e}" if e != 1 else ""))
        if not self.is_exact():
            parts.append(f"[{self.tail:.12g} +- {self.tail_err:.2g}]")
        return " * ".join(parts) if parts else "1"


def _merge(a: tuple, b: tuple) -> dict:
    out: dict = {}
    for k, e in list(a) + list(b):
        out[k] = out.get(k, 0) + e
    return out


@dataclass(frozen=True)
class GradedLine:
    """Integer degree plus a nonzero symbolic value."""

    degree: int
    value: SymbolicComplex

    @staticmethod
    def unit() -> "GradedLine":
        return GradedLine(0, SymbolicComplex.one())

    @staticmethod
    def of(value: SymbolicComplex, degree: int = 0) -> "GradedLine":
        return GradedLine(degree, value)

    def __str__(self) -> str:
        return f"({self.value})[{self.degree}]"


def line_tensor(a: GradedLine, b: GradedLine) -> GradedLine:
    return GradedLine(a.degree + b.degree, a.value.mul(b.value))


def line_inverse(a: GradedLine) -> GradedLine:
    return GradedLine(-a.degree, a.value.inverse())


def tate_twist(a: GradedLine, n: int) -> GradedLine:
    """Multiply the value by (2 pi i)^(-n); degree unchanged."""
    tw = SymbolicComplex.build(i_power=(-n) % 4, two_pi_half=-2 * n)
    return GradedLine(a.degree, a.value.mul(tw))


def two_pi_i_power(n: int) -> SymbolicComplex:
    """(2 pi i)^n as an exact symbolic value."""
    return SymbolicComplex.build(i_power=n % 4, two_pi_half=2 * n)


def numeric_eval(a: GradedLine, precision_bits: int = 200) -> tuple[mpmath.mpc, float]:
    return a.value.numeric_eval(precision_bits)


def rational_reconstruct(x, max_denominator: int, tol: float) -> Optional[Fraction]:
    """Nearest rational p/q with q <= max_denominator and |x - p/q| <= tol, or None."""
    x = mpmath.mpc(x)
    if abs(mpmath.im(x)) > tol * max(1.0, abs(x)):
        return None
    cand = Fraction(float(mpmath.re(x))).limit_denominator(max_denominator)
    if abs(x - mpmath.mpf(cand.numerator) / cand.denominator) <= tol * max(1.0, abs(x)):
        return cand
    return None


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _frac_json(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _frac_parse(s: str) -> Fraction:
    return Fraction(s)


def line_to_json(a: GradedLine) -> dict:
    v = a.value
    atoms = []
    atoms.append({"kind": "rational", "value": _frac_json(v.rational)})
    if v.i_power:
        atoms.append({"kind": "i_power", "value": v.i_power})
    if v.two_pi_half:
        atoms.append({"kind": "two_pi_half", "value": v.two_pi_half})
    for arg, e in v.gammas:
        atoms.append({"kind": "gamma", "arg": _frac_json(arg), "exp": e})
    if v.exp_rational:
        atoms.append({"kind": "exp_rational", "value": _frac_json(v.exp_rational)})
    if v.exp_two_pi_i:
        atoms.append({"kind": "exp_two_pi_i", "value": _frac_json(v.exp_two_pi_i)})
    for s, e in v.sqrts:
        atoms.append({"kind": "sqrt", "arg": _frac_json(s), "exp": e})
    for q, e in v.tame_units:
        atoms.append({"kind": "tame_unit", "arg": _frac_json(q), "exp": e})
    return {
        "degree": a.degree,
        "atoms": atoms,
        "numeric": {"re": float(v.tail.real), "im": float(v.tail.imag),
                    "err": float(v.tail_err)},
    }


def line_from_json(data: dict) -> GradedLine:
    kwargs: dict = {"gammas": {}, "sqrts": {}, "tame_units": {}}
    for atom in data["atoms"]:
        kind = atom["kind"]
        if kind == "rational":
            kwargs["rational"] = _frac_parse(atom["value"])
        elif kind == "i_power":
            kwargs["i_power"] = atom["value"]
        elif kind == "two_pi_half":
            kwargs["two_pi_half"] = atom["value"]
        elif kind == "gamma":
            kwargs["gammas"][_frac_parse(atom["arg"])] = atom["exp"]
        elif kind == "exp_rational":
            kwargs["exp_rational"] = _frac_parse(atom["value"])
        elif kind == "exp_two_pi_i":
            kwargs["exp_two_pi_i"] = _frac_parse(atom["value"])
        elif kind == "sqrt":
            kwargs["sqrts"][_frac_parse(atom["arg"])] = atom["exp"]
        elif kind == "tame_unit":
            kwargs["tame_units"][_frac_parse(atom["arg"])] = atom["exp"]
        else:
            raise LineError(f"unknown atom kind {kind!r}")
    num = data.get("numeric", {"re": 1.0, "im": 0.0, "err": 0.0})
    value = SymbolicComplex.build(tail=complex(num["re"], num["im"]), tail_err=num["err"],
                                  **kwargs)
    return GradedLine(data["degree"], value)


def line_json_dumps(a: GradedLine) -> str:
    return json.dumps(line_to_json(a), sort_keys=True)
