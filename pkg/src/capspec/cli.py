"""Command-line interface.

Subcommands: certify, eval, trace, crossings, shape.  Every flag can also
be set through an environment variable with the CAPSPEC_ prefix (flag
--precision-bits becomes CAPSPEC_PRECISION_BITS); explicit flags win.

Exit codes for certify: 0 all checks verified and the conclusion holds,
1 some check failed, 2 some check inconclusive (precision or tolerance
exhausted), 64 bad command line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import __version__
from .certify import (
    CertifyConfig,
    Status,
    certificate_to_json,
    run_certificate,
)
from .interval import IntervalError, from_decimal, mpfr_decimal
from .legendre import EvaluationError, LegendreQuery, eval_all

ENV_PREFIX = "CAPSPEC_"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.strip("-").replace("-", "_").upper()


def _resolve(args, flag: str, default, cast=str):
    """Flag value, falling back to the environment, then the default."""
    attr = flag.strip("-").replace("-", "_")
    val = getattr(args, attr, None)
    if val is not None:
        return val
    env = os.environ.get(_env_name(flag))
    if env is not None:
        return cast(env)
    return default


def _pair(text: str) -> tuple[str, str]:
    """lo:hi interval syntax; a single decimal is a degenerate interval."""
    parts = text.split(":")
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) == 2:
        return parts[0], parts[1]
    raise argparse.ArgumentTypeError(f"expected 'lo:hi' or a single decimal, got {text!r}")


def _fraction(text: str) -> Fraction:
    return Fraction(text)


def _write_or_print(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def build_parser() -> _Parser:
    p = _Parser(
        prog="capspec",
        description="Validated spectra of geodesic caps: rigorous enclosures, "
        "crossing certificates, and a floating-point spectrum explorer.",
        epilog=f"Every flag has an environment override: {ENV_PREFIX}<FLAG> "
        f"(e.g. {ENV_PREFIX}PRECISION_BITS). Explicit flags win.",
    )
    p.add_argument("--version", action="version", version=f"capspec {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common_rigor(sp):
        sp.add_argument("--precision-bits", type=int, default=None,
                        help="endpoint mantissa bits (default 256)")
        sp.add_argument("--terms", type=int, default=None, dest="K",
                        help="series truncation order K (default 100)")
        sp.add_argument("--gamma", type=_fraction, default=None,
                        help="tail growth ratio gamma > 1 (default 3/2)")

    c = sub.add_parser("certify", help="run the crossing certificate")
    common_rigor(c)
    c.add_argument("--tolerance", type=float, default=None,
                   help="branch-and-bound width floor (default 1e-6)")
    c.add_argument("--max-depth", type=int, default=None,
                   help="adaptive bisection depth cap (default 40)")
    c.add_argument("--workers", type=int, default=None,
                   help="worker pool size (reserved; execution is sequential)")
    c.add_argument("--profile", choices=("ell8", "ell6"), default=None,
                   help="certified scenario (default ell8)")
    c.add_argument("--rho-box", type=_pair, default=None, metavar="LO:HI",
                   help="override the rho box (decimal strings)")
    c.add_argument("--lambda-box", type=_pair, default=None, metavar="LO:HI",
                   help="override the lambda box (decimal strings)")
    c.add_argument("--output", default=None, help="certificate path (default certificate.json)")

    e = sub.add_parser("eval", help="rigorous enclosures of P, dP, Q, dQ")
    common_rigor(e)
    e.add_argument("--ell", type=int, default=None, help="angular mode (required)")
    e.add_argument("--lambda", dest="lam", type=_pair, default=None, metavar="LO:HI",
                   help="spectral parameter interval")
    e.add_argument("--rho", type=_pair, default=None, metavar="LO:HI",
                   help="stereographic radius interval")

    t = sub.add_parser("trace", help="trace an eigenvalue branch to CSV")
    t.add_argument("--geometry", default=None, help="s2, s3, s4 or h2 (default s2)")
    t.add_argument("--ell", type=int, default=None, help="angular mode (default 8)")
    t.add_argument("--bc", default=None, help="dirichlet or neumann (default dirichlet)")
    t.add_argument("--branch", type=int, default=None, help="branch index (default 0)")
    t.add_argument("--grid", default=None, metavar="LO:HI:N",
                   help="parameter grid (default: figure grid of the geometry)")
    t.add_argument("--output", default=None, help="CSV path (default stdout)")

    x = sub.add_parser("crossings", help="locate Neumann/Dirichlet crossings")
    x.add_argument("--geometry", default=None, help="s2, s3, s4 or h2 (default s2)")
    x.add_argument("--ell", type=int, default=None, help="Dirichlet mode (default 8)")
    x.add_argument("--neumann-branch", type=int, default=None,
                   help="zonal branch to test (default: known branch for the mode)")
    x.add_argument("--grid", default=None, metavar="LO:HI:N", help="search grid")
    x.add_argument("--suggest-box", action="store_true",
                   help="also print certify flags for the suggested box")
    x.add_argument("--output", default=None, help="JSON path (default stdout)")

    s = sub.add_parser("shape", help="first-order bifurcated boundary shape to CSV")
    s.add_argument("--s", dest="s", type=float, default=None,
                   help="perturbation parameter (default 0.01)")
    s.add_argument("--profile", choices=("ell8", "ell6"), default=None,
                   help="crossing to expand around (default ell8)")
    s.add_argument("--samples", type=int, default=None, help="boundary samples (default 256)")
    s.add_argument("--output", default=None, help="CSV path (default stdout)")
    return p


# -- subcommands -------------------------------------------------------------


def cmd_certify(args) -> int:
    cfg = CertifyConfig(
        precision_bits=_resolve(args, "precision-bits", 256, int),
        K=_resolve(args, "terms", 100, int),
        gamma=_resolve(args, "gamma", Fraction(3, 2), Fraction),
        tolerance=_resolve(args, "tolerance", 1e-6, float),
        max_depth=_resolve(args, "max-depth", 40, int),
        workers=_resolve(args, "workers", 1, int),
        profile=_resolve(args, "profile", "ell8"),
        rho_box=_resolve(args, "rho-box", None, _pair),
        lambda_box=_resolve(args, "lambda-box", None, _pair),
    )
    cert = run_certificate(cfg)

    wide = max(len(c.id) for c in cert.checks)
    print(f"{'check':<{wide}}  {'status':<13} {'subdiv':>6} {'time':>9}")
    for c in cert.checks:
        print(f"{c.id:<{wide}}  {c.status.value:<13} {c.subdivisions:>6} {c.wall_time_ms:>7}ms")
    co = cert.conclusion
    print()
    if co.exists_crossing:
        print(f"crossing certified inside rho = [{co.rho_star_decimal[0]}, {co.rho_star_decimal[1]}],")
        print(f"                     lambda = [{co.lambda_star_decimal[0]}, {co.lambda_star_decimal[1]}]")
        a_lo, a_hi = co.a_star.to_decimal_pair(16)
        n_lo, n_hi = co.nu_star.to_decimal_pair(16)
        print(f"cap height a* in [{a_lo}, {a_hi}]")
        print(f"degree nu* in [{n_lo}, {n_hi}]")
    else:
        print("no crossing certified")
    if co.n_star_is_zero is not None:
        print(f"first Dirichlet branch: {co.n_star_is_zero}")
    if co.m_star_lower_bound is not None:
        print(f"Neumann index lower bound: {co.m_star_lower_bound}")
    if co.transversal is not None:
        print(f"transversal: {co.transversal}")
    if co.nonresonant is not None:
        print(f"nonresonant: {co.nonresonant}")

    out = _resolve(args, "output", "certificate.json")
    with open(out, "w") as fh:
        fh.write(certificate_to_json(cert))
    print(f"\ncertificate written to {out}")

    worst = cert.worst_status()
    if worst is Status.FAILED:
        return EXIT_FAILED
    if worst is Status.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    needed = [co.exists_crossing, co.transversal]
    if cfg.profile == "ell8":
        needed += [co.n_star_is_zero, (co.m_star_lower_bound or 0) >= 4, co.nonresonant]
    return EXIT_OK if all(needed) else EXIT_FAILED


def cmd_eval(args) -> int:
    ell = _resolve(args, "ell", None, int)
    lam = _resolve(args, "lam", None, _pair) or _resolve(args, "lambda", None, _pair)
    rho = _resolve(args, "rho", None, _pair)
    if ell is None or lam is None or rho is None:
        print("eval requires --ell, --lambda and --rho", file=sys.stderr)
        return EXIT_USAGE
    prec = _resolve(args, "precision-bits", 256, int)
    K = _resolve(args, "terms", 100, int)
    gamma = _resolve(args, "gamma", Fraction(3, 2), Fraction)
    try:
        lam_iv = from_decimal(*lam, prec)
        rho_iv = from_decimal(*rho, prec)
        ev = eval_all(LegendreQuery(ell, lam_iv, rho_iv, K, gamma))
    except (EvaluationError, IntervalError) as exc:
        print(f"evaluation rejected: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for name, iv in (("P", ev.P), ("dP", ev.dP), ("Q", ev.Q), ("dQ", ev.dQ)):
        lo, hi = iv.to_decimal_pair(25)
        print(f"{name:>3} = [{lo}, {hi}]")
    radii = ", ".join(
        f"{n}={mpfr_decimal(r, 4, 'u')}" for n, r in zip(("P", "dP", "Q", "dQ"), ev.tail_radii)
    )
    print(f"tail radii: {radii}")
    return EXIT_OK


def _parse_grid(text: str | None, geometry, ell: int):
    from . import explorer as ex
    import numpy as np

    if text is None:
        return None
    parts = text.split(":")
    if len(parts) == 2:
        lo, hi, n = float(parts[0]), float(parts[1]), 16
    elif len(parts) == 3:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        raise argparse.ArgumentTypeError(f"expected LO:HI[:N], got {text!r}")
    return np.linspace(lo, hi, n)


def cmd_trace(args) -> int:
    from . import explorer as ex

    geometry = ex.Geometry.parse(_resolve(args, "geometry", "s2"))
    ell = _resolve(args, "ell", 8, int)
    bc = _resolve(args, "bc", "dirichlet")
    branch = _resolve(args, "branch", 0, int)
    grid = _parse_grid(_resolve(args, "grid", None), geometry, ell)
    if grid is None:
        grid = ex.figure_grid(geometry, 400 if geometry.label == "s2" else 60)
    sink: list = []
    curve = ex.trace_curve(geometry, ell, bc, branch, grid, warnings_sink=sink)
    _write_or_print(ex.curve_to_csv(curve), _resolve(args, "output", None))
    for w in sink:
        print(f"warning: {w}", file=sys.stderr)
    if sink:
        print(f"{len(sink)} warning(s)", file=sys.stderr)
    return EXIT_OK


def cmd_crossings(args) -> int:
    from . import explorer as ex

    geometry = ex.Geometry.parse(_resolve(args, "geometry", "s2"))
    ell = _resolve(args, "ell", 8, int)
    branch = _resolve(args, "neumann-branch", None, int)
    grid = _parse_grid(_resolve(args, "grid", None), geometry, ell)
    sink: list = []
    crossings = ex.search_crossings(
        geometry,
        ell,
        grid=grid,
        neumann_branches=[branch] if branch is not None else None,
        warnings_sink=sink,
    )
    payload = json.dumps([ex.crossing_to_dict(c) for c in crossings], indent=2)
    _write_or_print(payload + "\n", _resolve(args, "output", None))
    if args.suggest_box:
        for c in crossings:
            if c.suggested_box:
                rb, lb = c.suggested_box["rho"], c.suggested_box["lambda"]
                print(
                    f"# certify --profile ell{c.ell} --rho-box {rb[0]}:{rb[1]} "
                    f"--lambda-box {lb[0]}:{lb[1]}",
                    file=sys.stderr,
                )
    for w in sink:
        print(f"warning: {w}", file=sys.stderr)
    if sink:
        print(f"{len(sink)} warning(s)", file=sys.stderr)
    return EXIT_OK


def cmd_shape(args) -> int:
    from . import explorer as ex

    profile = _resolve(args, "profile", "ell8")
    ell = 8 if profile == "ell8" else 6
    s = _resolve(args, "s", 0.01, float)
    samples = _resolve(args, "samples", 256, int)
    crossings = ex.search_crossings(ex.S2, ell)
    if not crossings:
        print("no crossing found to expand around", file=sys.stderr)
        return EXIT_FAILED
    shape = ex.boundary_shape(crossings[0], s, samples)
    _write_or_print(ex.shape_to_csv(shape), _resolve(args, "output", None))
    return EXIT_OK


_COMMANDS = {
    "certify": cmd_certify,
    "eval": cmd_eval,
    "trace": cmd_trace,
    "crossings": cmd_crossings,
    "shape": cmd_shape,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (EvaluationError, IntervalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
