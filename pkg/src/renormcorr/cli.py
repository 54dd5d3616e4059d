"""Command-line interface.

Exit status: 0 on success, 1 on usage or validation errors, 2 on numeric or
data failures.  The test decision is part of the output, never the status.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import clt, harness, laws
from .errors import ComputationError, UsageError
from .indep import test_independence
from .matrix_core import read_csv_matrix, spectrum

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_lsd(args) -> int:
    model = laws.SpectralModel(laws.parse_ratio(args.c))
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    L, R = model.support_left, model.support_right
    pad = 0.1 * (R - L)
    lo = L - pad
    if model.has_atom:
        lo = min(lo, model.atom_location - pad)
    xs = np.linspace(lo, R + pad, args.grid)
    dens = laws.lsd_density(xs, model)
    cdf = laws.lsd_cdf(xs, model)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["kind", "x", "density", "cdf", "mass"])
        for x, d, F in zip(xs, dens, cdf):
            w.writerow(["grid", repr(float(x)), repr(float(d)), repr(float(F)), ""])
        if model.has_atom:
            w.writerow(["atom", repr(model.atom_location), "", "", repr(model.atom_weight)])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_eigen(args) -> int:
    Y = read_csv_matrix(args.input, skip_header=args.skip_header)
    res = spectrum(Y)
    fh, close = _open_out(args.out)
    try:
        fh.write(f"# n={res.n},p={res.p},c_n={res.c_n!r},c_N={res.c_N!r}\n")
        fh.write("eigenvalue\n")
        for lam in res.eigenvalues:
            fh.write(f"{float(lam)!r}\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_test(args) -> int:
    Y = read_csv_matrix(args.input, skip_header=args.skip_header)
    report = test_independence(Y, args.alpha)
    d = report.to_dict()
    d.pop("seed")
    json.dump(d, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_clt_check(args) -> int:
    degrees = []
    for name in args.f:
        if name not in harness.MONOMIALS:
            raise UsageError(f"unsupported monomial {name!r}; choose from x2, x3, x4")
        degrees.append((name, harness.MONOMIALS[name]))
    ctx = clt.CltContext(args.n, args.p)
    for name, k in degrees:
        t = clt.monomial_terms(k, ctx.n, ctx.p)
        rec = {
            "n": ctx.n,
            "p": ctx.p,
            "c_N": ctx.c_N,
            "f": name,
            "centering": t.centering,
            "correction": t.correction,
            "variance": t.variance,
        }
        json.dump(rec, sys.stdout)
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = harness.load_config(args.config)
    summary = harness.run_experiment(cfg, threads=args.threads, output_path=args.out)
    json.dump(summary, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="renormcorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lsd", help="tabulate the limiting spectral law")
    p.add_argument("--c", required=True, help="aspect ratio, a positive number or 'inf'")
    p.add_argument("--grid", type=int, default=201, help="number of grid points")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_lsd)

    p = sub.add_parser("eigen", help="eigenvalues of the renormalized matrix")
    p.add_argument("--input", required=True, help="p x n CSV, variables in rows")
    p.add_argument("--skip-header", action="store_true")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("test", help="independence test on a data file")
    p.add_argument("--input", required=True, help="p x n CSV, variables in rows")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--skip-header", action="store_true")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("clt-check", help="CLT centering, correction and variance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--f", action="append", required=True, help="x2, x3 or x4; repeatable")
    p.set_defaults(func=cmd_clt_check)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${harness.THREADS_ENV} or 1)")
    p.add_argument("--out", help="output directory, overrides output_path in the config")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"renormcorr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ComputationError as exc:
        print(f"renormcorr {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"renormcorr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
