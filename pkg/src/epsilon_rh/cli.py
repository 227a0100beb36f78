"""Command-line front end for the epsilon-factor pipeline.

Parses a connection form and a twisting form, prints per-point local data,
runs the global product check, and optionally cross-checks each local factor
against the numerical oracle.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from .connection import Connection, ConnectionError_, load_toml, profile
from .derham import cohomology
from .exactalg import ExactAlgError, ParseError, RationalFunction, parse
from .localeps import LocalEpsError, local_data_at, point_report
from .oracle import OracleError, product_check, report_to_json, tau_numeric
from .periods import PeriodError, period_determinant

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3


@dataclass(frozen=True)
class JobConfig:
    omega: RationalFunction
    nu: RationalFunction
    precision_digits: int
    anchor: Fraction
    omit_m_units: bool
    oracle: bool
    json_out: str | None
    explain: bool


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="epsilon-rh",
        description="Local and global epsilon factors of a rank-one "
                    "connection d + omega on the projective line.")
    ap.add_argument("--omega", help="connection form, e.g. '1/2/z - 1'")
    ap.add_argument("--nu", default=None,
                    help="twisting one-form coefficient (default 1, i.e. dz)")
    ap.add_argument("--precision", type=int, default=12, metavar="DIGITS",
                    help="target decimal digits for numerics (default 12)")
    ap.add_argument("--anchor", default="1",
                    help="rational base point for fiber values (default 1)")
    ap.add_argument("--oracle", action="store_true",
                    help="also cross-check each local factor numerically")
    ap.add_argument("--omit-m-units", action="store_true",
                    help="report local factors with monodromy units stripped")
    ap.add_argument("--json", dest="json_out", metavar="PATH",
                    help="write the full report as JSON to PATH")
    ap.add_argument("--explain", action="store_true",
                    help="print the invariant table only, no numerics")
    ap.add_argument("--config", metavar="PATH",
                    help="TOML file with [connection] omega and [form] nu")
    return ap


def _parse_config(argv: list[str]) -> JobConfig:
    args = _build_parser().parse_args(argv)
    if args.config:
        job = load_toml(args.config)
        omega, nu = job.omega, job.nu
        if args.nu is not None:
            nu = parse(args.nu)
    else:
        if args.omega is None:
            raise ParseError("either --omega or --config is required")
        omega = parse(args.omega)
        nu = parse(args.nu if args.nu is not None else "1")
    anchor = Fraction(args.anchor)
    return JobConfig(omega=omega, nu=nu, precision_digits=args.precision,
                     anchor=anchor, omit_m_units=args.omit_m_units,
                     oracle=args.oracle, json_out=args.json_out,
                     explain=args.explain)


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.10g}{z.imag:+.10g}i"


def _explain_table(c: Connection) -> str:
    prof = profile(c)
    if not prof.entries:
        return "connection extends to the projective line; no local data"
    lines_out = [f"{'point':>8} {'f':>3} {'a':>3} {'delta':>8} {'type':>12}"]
    for e in prof.entries:
        from .localeps import character_of
        chi = character_of(c, e.point, 8)
        pt = "oo" if e.point.at_infinity else str(e.point.value)
        lines_out.append(f"{pt:>8} {chi.f:>3} {chi.a:>3} "
                         f"{str(chi.delta):>8} {chi.ramification:>12}")
    return "\n".join(lines_out)


def _run(cfg: JobConfig) -> int:
    c = Connection(cfg.omega)
    if cfg.explain:
        print(_explain_table(c))
        return EXIT_PASS

    precision = 10.0 ** (-cfg.precision_digits)
    prof = profile(c)
    if not prof.entries:
        print("connection extends to the projective line; "
              "product check inapplicable")
        return EXIT_PASS

    report: dict = {"omega": str(cfg.omega), "nu": str(cfg.nu), "points": []}
    print(f"omega = {cfg.omega}   nu = ({cfg.nu}) dz")
    print()
    header = f"{'point':>8} {'f':>3} {'a':>3} {'delta':>8} {'c':>3}  tau"
    print(header)
    for e in prof.entries:
        rep = point_report(c, e.point, cfg.nu, cfg.anchor)
        _chi, _inp, _g, _fib, tau, _eps = local_data_at(
            c, e.point, cfg.nu, cfg.anchor)
        if cfg.omit_m_units:
            core, units = tau.value.without_m_units()
            rep["tau_core"] = str(core)
            rep["tau_units"] = str(units)
            tau_text = str(core)
        else:
            tau_text = str(tau.value)
        print(f"{rep['point']:>8} {rep['f']:>3} {rep['a']:>3} "
              f"{rep['delta']:>8} {rep['c_nu']:>3}  {tau_text}")
        if cfg.oracle:
            from .localeps import character_of, gauss_sum_input
            from .exactalg import form_expand_at
            chi = character_of(c, e.point, 8)
            depth = abs(chi.a) + 8
            nu_loc = form_expand_at(cfg.nu, e.point, depth)
            try:
                val, err = tau_numeric(chi, nu_loc, precision)
                rep["oracle"] = {"re": val.real, "im": val.imag, "err": err}
                print(f"{'':>8} oracle: {_fmt_complex(val)}  (err {err:.2g})")
            except OracleError as exc:
                rep["oracle"] = {"error": str(exc)}
                print(f"{'':>8} oracle: {exc}")
        report["points"].append(rep)

    basis = cohomology(c)
    report["h0"] = basis.h0_dim
    report["h1"] = basis.h1_dim
    print()
    print(f"cohomology: h0 = {basis.h0_dim}, h1 = {basis.h1_dim}")

    pr = product_check(c, cfg.nu, precision=max(precision, 1e-12))
    report["product_check"] = report_to_json(pr)
    print(f"product check: degree {'ok' if pr.degree_check else 'FAIL'}, "
          f"chi = {pr.chi}, c_sum = {pr.c_sum}")
    if pr.numerics_skipped:
        print(f"  numerics skipped: {pr.skip_reason}")
    else:
        print(f"  lhs = {_fmt_complex(pr.lhs)}")
        print(f"  rhs = {_fmt_complex(pr.rhs)}")
        print(f"  rational part = {pr.rational_part}  unit = {pr.unit_used}")
    print(f"  pass = {pr.passed}")

    if cfg.json_out:
        with open(cfg.json_out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    return EXIT_PASS if pr.passed or (pr.numerics_skipped and pr.degree_check) \
        else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = _parse_config(argv)
    except (ParseError, ValueError, ConnectionError_, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return _run(cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (LocalEpsError, OracleError, PeriodError,
            ExactAlgError, ConnectionError_) as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
