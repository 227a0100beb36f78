"""Exact arithmetic for rational functions on P^1 and Laurent series at its points.

Coefficients live in Q (`fractions.Fraction`).  Local expansions use the
coordinate t = z - p at a finite point p and w = 1/z at infinity; expansions of
1-forms bake in dz = -dw/w**2 at infinity so residues and orders are
coordinate-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import mpmath

Rat = Fraction
RatLike = Union[Fraction, int]


class ExactAlgError(Exception):
    """Base error for the exact-arithmetic layer."""


class ParseError(ExactAlgError):
    """Malformed expression string."""


class PrecisionError(ExactAlgError):
    """An operation would need coefficients beyond the known truncation."""


class NonRationalRootError(ExactAlgError):
    """A required divisor point is not rational."""


# ---------------------------------------------------------------------------
# Dense polynomials over Q
# ---------------------------------------------------------------------------


def _int_primitive(coeffs: Sequence[Fraction]) -> list[int]:
    """Clear denominators and divide by the content; [] for the zero polynomial."""
    import math

    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    coeffs = coeffs[:n]
    if not coeffs:
        return []
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in coeffs]
    return _make_primitive(ints)


def _make_primitive(ints: list[int]) -> list[int]:
    import math

    while ints and ints[-1] == 0:
        ints.pop()
    if not ints:
        return []
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    sign = -1 if ints[-1] < 0 else 1
    return [c // (sign * g) for c in ints]


def _int_prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of integer polynomials: r = lead(b)^j * a mod b, some j >= 0."""
    db = len(b) - 1
    lead = b[-1]
    r = list(a)
    while len(r) - 1 >= db:
        top = r[-1]
        k = len(r) - 1 - db
        r = [c * lead for c in r]
        for i in range(db + 1):
            r[k + i] -= top * b[i]
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return r


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return tuple(Fraction(c) for c in coeffs[:n])


@dataclass(frozen=True)
class Poly:
    """Dense polynomial; coeffs[i] is the coefficient of z**i."""

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable[RatLike] = ()):  # noqa: D107
        object.__setattr__(self, "coeffs", _trim([Fraction(c) for c in coeffs]))

    @staticmethod
    def const(c: RatLike) -> "Poly":
        return Poly([Fraction(c)])

    @staticmethod
    def x() -> "Poly":
        return Poly([0, 1])

    @property
    def degree(self) -> int:
        """Degree, with deg 0 = -1 by convention."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __getitem__(self, i: int) -> Fraction:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Fraction(0)

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self[i] + other[i] for i in range(n)])

    def __sub__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self[i] - other[i] for i in range(n)])

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __mul__(self, other: "Poly") -> "Poly":
        if self.is_zero() or other.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    def scale(self, c: RatLike) -> "Poly":
        c = Fraction(c)
        return Poly([a * c for a in self.coeffs])

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        q = [Fraction(0)] * max(0, self.degree - other.degree + 1)
        rem = list(self.coeffs)
        dlead = other.coeffs[-1]
        dd = other.degree
        while len(rem) - 1 >= dd and any(c != 0 for c in rem):
            while rem and rem[-1] == 0:
                rem.pop()
            if len(rem) - 1 < dd:
                break
            k = len(rem) - 1 - dd
            c = rem[-1] / dlead
            q[k] = c
            for i in range(dd + 1):
                rem[k + i] -= c * other.coeffs[i]
            rem.pop()
        return Poly(q), Poly(rem)

    def gcd(self, other: "Poly") -> "Poly":
        """Monic gcd via the primitive PRS over Z (no rational blowup)."""
        a = _int_primitive(self.coeffs)
        b = _int_primitive(other.coeffs)
        if len(a) < len(b):
            a, b = b, a
        while b:
            r = _int_prem(a, b)
            a, b = b, _make_primitive(r)
        if not a:
            return Poly()
        lead = Fraction(a[-1])
        return Poly([Fraction(c) / lead for c in a])

    def derivative(self) -> "Poly":
        return Poly([i * c for i, c in enumerate(self.coeffs)][1:])

    def eval_rat(self, x: RatLike) -> Fraction:
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_mpc(self, x) -> "mpmath.mpc":
        acc = mpmath.mpc(0)
        for c in reversed(self.coeffs):
            acc = acc * x + mpmath.mpc(c.numerator) / c.denominator
        return acc

    def shift(self, p: RatLike) -> "Poly":
        """Return the polynomial q with q(t) = self(p + t)."""
        p = Fraction(p)
        out = Poly()
        for c in reversed(self.coeffs):
            out = out * Poly([p, 1]) + Poly.const(c)
        return out

    def reversed_coeffs(self) -> "Poly":
        """Return z**deg * self(1/z)."""
        return Poly(list(reversed(self.coeffs)))


# ---------------------------------------------------------------------------
# Points of P^1
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Point:
    """A rational point of P^1; `at_infinity` distinguishes the point at infinity."""

    at_infinity: bool
    value: Fraction = Fraction(0)

    @staticmethod
    def finite(v: RatLike) -> "Point":
        return Point(False, Fraction(v))

    def __repr__(self) -> str:
        return "INFINITY" if self.at_infinity else f"Point({self.value})"

    def __str__(self) -> str:
        return "oo" if self.at_infinity else str(self.value)


INFINITY = Point(True)


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalFunction:
    """Quotient of coprime dense polynomials; denominator monic and nonzero."""

    num: Poly
    den: Poly

    def __init__(self, num: Poly, den: Poly = Poly.const(1)):  # noqa: D107
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        g = num.gcd(den)
        if not g.is_zero() and g.degree > 0:
            num = num.divmod(g)[0]
            den = den.divmod(g)[0]
        lead = den.coeffs[-1]
        if lead != 1:
            num = num.scale(1 / lead)
            den = den.scale(1 / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @staticmethod
    def const(c: RatLike) -> "RationalFunction":
        return RationalFunction(Poly.const(c))

    @staticmethod
    def z() -> "RationalFunction":
        return RationalFunction(Poly.x())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.den - other.num * self.den, self.den * other.den)

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def scale(self, c: RatLike) -> "RationalFunction":
        return RationalFunction(self.num.scale(c), self.den)

    def __pow__(self, n: int) -> "RationalFunction":
        if n < 0:
            return RationalFunction(self.den, self.num) ** (-n)
        out = RationalFunction.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def derivative(self) -> "RationalFunction":
        return RationalFunction(
            self.num.derivative() * self.den - self.num * self.den.derivative(),
            self.den * self.den,
        )

    def eval_rat(self, x: RatLike) -> Fraction:
        d = self.den.eval_rat(x)
        if d == 0:
            raise ZeroDivisionError(f"pole at {x}")
        return self.num.eval_rat(x) / d

    def eval_mpc(self, x) -> "mpmath.mpc":
        return self.num.eval_mpc(x) / self.den.eval_mpc(x)

    def compose(self, inner: "RationalFunction") -> "RationalFunction":
        """Return self(inner(z))."""
        acc_n = RationalFunction.const(0)
        for c in reversed(self.num.coeffs):
            acc_n = acc_n * inner + RationalFunction.const(c)
        acc_d = RationalFunction.const(0)
        for c in reversed(self.den.coeffs):
            acc_d = acc_d * inner + RationalFunction.const(c)
        return acc_n / acc_d

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num.coeffs, self.den.coeffs))

    def __str__(self) -> str:
        return serialize(self)

    def finite_poles(self) -> dict[Fraction, int]:
        """Rational roots of the denominator with multiplicities.

        Raises NonRationalRootError if the denominator has a non-rational factor.
        """
        return rational_roots(self.den, require_all=True)

    def pole_order_at(self, p: Point) -> int:
        """Order of the pole of self (as a function, not a form) at p; 0 if regular."""
        s = expand_at(self, p, 1)
        if s.is_zero():
            return 0
        return max(0, -s.valuation())


def rational_roots(poly: Poly, require_all: bool = False) -> dict[Fraction, int]:
    """Rational roots of poly with multiplicities, verified exactly.

    Root candidates come from a high-precision numeric solve and are confirmed by
    exact evaluation, so the result is exact.  With require_all=True a leftover
    non-rational factor raises NonRationalRootError.
    """
    if poly.is_zero():
        raise ExactAlgError("zero polynomial has no well-defined root set")
    # squarefree part has simple roots, which the numeric solver resolves sharply
    g = poly.gcd(poly.derivative()) if poly.degree > 0 else Poly.const(1)
    sqfree = poly.divmod(g)[0] if g.degree > 0 else poly
    candidates: set[Fraction] = set()
    if sqfree.degree > 0 and sqfree[0] == 0:
        candidates.add(Fraction(0))
    if sqfree.degree > 0:
        with mpmath.workdps(60):
            try:
                approx = mpmath.polyroots(
                    [mpmath.mpf(c.numerator) / c.denominator for c in reversed(sqfree.coeffs)],
                    maxsteps=400, extraprec=400, error=False,
                )
            except mpmath.libmp.NoConvergence:
                approx = []
        for r in approx:
            if abs(mpmath.im(r)) > 1e-30:
                continue
            cand = Fraction(float(mpmath.re(r))).limit_denominator(10**8)
            if poly.eval_rat(cand) == 0:
                candidates.add(cand)
    roots: dict[Fraction, int] = {}
    p = poly
    for cand in sorted(candidates):
        mult = 0
        while True:
            q, rem = p.divmod(Poly([-cand, 1]))
            if not rem.is_zero():
                break
            p = q
            mult += 1
        if mult:
            roots[cand] = mult
    if require_all and p.degree > 0:
        raise NonRationalRootError(f"non-rational factor of degree {p.degree} remains")
    return roots


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalSeries:
    """Truncated Laurent series at a point: coefficients for exponents < trunc_order."""

    center: Point
    coeffs: Mapping[int, Fraction] = field(default_factory=dict)
    trunc_order: int = 0

    def __init__(self, center: Point, coeffs: Mapping[int, RatLike], trunc_order: int):  # noqa: D107
        clean = {int(e): Fraction(c) for e, c in coeffs.items() if c != 0 and e < trunc_order}
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "coeffs", dict(clean))
        object.__setattr__(self, "trunc_order", int(trunc_order))

    def __getitem__(self, e: int) -> Fraction:
        if e >= self.trunc_order:
            raise PrecisionError(f"coefficient of t^{e} beyond truncation {self.trunc_order}")
        return self.coeffs.get(e, Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self) -> int:
        if not self.coeffs:
            raise ExactAlgError("valuation of (truncated-)zero series")
        return min(self.coeffs)

    def truncate(self, order: int) -> "LocalSeries":
        order = min(order, self.trunc_order)
        return LocalSeries(self.center, {e: c for e, c in self.coeffs.items() if e < order}, order)

    def scale(self, c: RatLike) -> "LocalSeries":
        return LocalSeries(self.center, {e: v * Fraction(c) for e, v in self.coeffs.items()},
                           self.trunc_order)

    def shift_exponents(self, n: int) -> "LocalSeries":
        """Multiply by t**n."""
        return LocalSeries(self.center, {e + n: v for e, v in self.coeffs.items()},
                           self.trunc_order + n)

    def __str__(self) -> str:
        var = "w" if self.center.at_infinity else "t"
        if not self.coeffs:
            return f"O({var}^{self.trunc_order})"
        parts = [f"{c}*{var}^{e}" for e, c in sorted(self.coeffs.items())]
        return " + ".join(parts) + f" + O({var}^{self.trunc_order})"


def series_add(a: LocalSeries, b: LocalSeries) -> LocalSeries:
    if a.center != b.center:
        raise ExactAlgError("center mismatch")
    trunc = min(a.trunc_order, b.trunc_order)
    exps = set(a.coeffs) | set(b.coeffs)
    return LocalSeries(a.center,
                       {e: a.coeffs.get(e, Fraction(0)) + b.coeffs.get(e, Fraction(0))
                        for e in exps if e < trunc},
                       trunc)


def series_mul(a: LocalSeries, b: LocalSeries) -> LocalSeries:
    if a.center != b.center:
        raise ExactAlgError("center mismatch")
    if a.is_zero() or b.is_zero():
        av = 0 if a.is_zero() else a.valuation()
        bv = 0 if b.is_zero() else b.valuation()
        return LocalSeries(a.center, {}, min(av + b.trunc_order, bv + a.trunc_order))
    trunc = min(a.valuation() + b.trunc_order, b.valuation() + a.trunc_order)
    out: dict[int, Fraction] = {}
    for e1, c1 in a.coeffs.items():
        for e2, c2 in b.coeffs.items():
            e = e1 + e2
            if e < trunc:
                out[e] = out.get(e, Fraction(0)) + c1 * c2
    return LocalSeries(a.center, out, trunc)


def series_inv(a: LocalSeries, target_trunc: int) -> LocalSeries:
    """Multiplicative inverse with a*inv == 1 up to target_trunc."""
    if a.is_zero():
        raise ExactAlgError("inverse of zero series")
    v = a.valuation()
    # inv = t^(-v) * unit_inv; unit_inv needs exponents 0 .. target_trunc + v - 1
    n_terms = target_trunc + v
    if a.trunc_order - v < n_terms:
        raise PrecisionError("insufficient known coefficients for requested inverse truncation")
    lead = a.coeffs[v]
    # unit part u with u[0] = 1
    u = {e - v: c / lead for e, c in a.coeffs.items()}
    inv = [Fraction(0)] * max(n_terms, 1)
    inv[0] = Fraction(1)
    for n in range(1, n_terms):
        s = Fraction(0)
        for k, ck in u.items():
            if 0 < k <= n:
                s += ck * inv[n - k]
        inv[n] = -s
    coeffs = {i - v: c / lead for i, c in enumerate(inv)}
    return LocalSeries(a.center, coeffs, target_trunc)


@dataclass(frozen=True)
class LocalForm:
    """A local 1-form: series * dt in the canonical coordinate at its center."""

    series: LocalSeries

    @property
    def center(self) -> Point:
        return self.series.center


def expand_at(r: RationalFunction, p: Point, target_trunc: int = 10) -> LocalSeries:
    """Laurent expansion of r at p in t = z - p, or in w = 1/z at infinity."""
    if r.is_zero():
        return LocalSeries(p, {}, target_trunc)
    if p.at_infinity:
        # r(1/w) = w^(deg den - deg num) * rev(num)(w)/rev(den)(w)
        num, den = r.num, r.den
        shift_pow = den.degree - num.degree
        num_w = num.reversed_coeffs()
        den_w = den.reversed_coeffs()
        return _poly_quotient_series(p, num_w, den_w, shift_pow, target_trunc)
    num_t = r.num.shift(p.value)
    den_t = r.den.shift(p.value)
    return _poly_quotient_series(p, num_t, den_t, 0, target_trunc)


def _poly_quotient_series(center: Point, num: Poly, den: Poly, shift_pow: int,
                          target_trunc: int) -> LocalSeries:
    num_s = LocalSeries(center, dict(enumerate(num.coeffs)), target_trunc + abs(shift_pow)
                        + 3 * (len(den.coeffs) + len(num.coeffs)) + 8)
    den_s = LocalSeries(center, dict(enumerate(den.coeffs)), num_s.trunc_order)
    inv = series_inv(den_s, target_trunc - shift_pow + 1)
    out = series_mul(num_s, inv).shift_exponents(shift_pow)
    return out.truncate(target_trunc)


def form_expand_at(f: RationalFunction, p: Point, target_trunc: int = 10) -> LocalForm:
    """Expansion of the global form f*dz at p; applies dz = -dw/w**2 at infinity."""
    if p.at_infinity:
        s = expand_at(f, p, target_trunc + 2)
        s = s.scale(-1).shift_exponents(-2).truncate(target_trunc)
        return LocalForm(s)
    return LocalForm(expand_at(f, p, target_trunc))


def residue(f: LocalForm) -> Fraction:
    if f.series.trunc_order <= -1:
        raise PrecisionError("residue coefficient beyond truncation")
    return f.series.coeffs.get(-1, Fraction(0))


def order(f: Union[LocalForm, LocalSeries]) -> int:
    s = f.series if isinstance(f, LocalForm) else f
    return s.valuation()


# ---------------------------------------------------------------------------
# Parsing / serialization
# ---------------------------------------------------------------------------


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(text[i:j])
            i = j
        elif ch in "+-*/^()z":
            tokens.append(ch)
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} at position {i}")
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def parse(self) -> RationalFunction:
        r = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing input at token {self.peek()!r}")
        return r

    def expr(self) -> RationalFunction:
        sign = 1
        while self.peek() in ("+", "-"):
            if self.take() == "-":
                sign = -sign
        acc = self.term().scale(sign)
        while self.peek() in ("+", "-"):
            op = self.take()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> RationalFunction:
        acc = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            f = self.factor()
            acc = acc * f if op == "*" else acc / f
        return acc

    def factor(self) -> RationalFunction:
        if self.peek() == "-":
            self.take()
            return -self.factor()
        base = self.atom()
        if self.peek() == "^":
            self.take()
            neg = False
            if self.peek() == "-":
                self.take()
                neg = True
            tok = self.take()
            if not tok.isdigit():
                raise ParseError(f"expected integer exponent, got {tok!r}")
            n = int(tok)
            base = base ** (-n if neg else n)
        return base

    def atom(self) -> RationalFunction:
        tok = self.take()
        if tok == "(":
            r = self.expr()
            self.expect(")")
            return r
        if tok == "z":
            return RationalFunction.z()
        if tok.isdigit():
            return RationalFunction.const(int(tok))
        raise ParseError(f"unexpected token {tok!r}")


def parse(text: str) -> RationalFunction:
    """Parse an expression in z (integers, + - * / ^, parentheses)."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    return _Parser(tokens).parse()


def _poly_str(p: Poly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for i in range(p.degree, -1, -1):
        c = p[i]
        if c == 0:
            continue
        if i == 0:
            body = _frac_str(abs(c))
        else:
            zpow = "z" if i == 1 else f"z^{i}"
            body = zpow if abs(c) == 1 else f"{_frac_str(abs(c))}*{zpow}"
        parts.append(("-" if c < 0 else "+", body))
    sign0, body0 = parts[0]
    out = ("-" if sign0 == "-" else "") + body0
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def serialize(r: RationalFunction) -> str:
    """Canonical string: expanded numerator over expanded monic denominator."""
    if r.den.degree == 0:
        return _poly_str(r.num)
    return f"({_poly_str(r.num)})/({_poly_str(r.den)})"
