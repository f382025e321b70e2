"""Command-line entry point.

Exit codes: 0 converged, 1 iteration limit reached, 2 breakdown,
3 usage or I/O error.
"""

import argparse
import logging
import sys

from .config import SolverConfig
from .errors import ConfigurationError, InvalidArgumentError, MatrixMarketError
from .harness import count_report, format_summary, run_single, sweep_n
from .errors import InsufficientDataError
from .mmio import read_matrix_market

EXIT_OK, EXIT_NO_CONV, EXIT_BREAKDOWN, EXIT_USAGE = 0, 1, 2, 3

_SHADOW = {"randn": "randn_r0", "sign": "sign_r0", "crandn": "complex_randn_r0", "csign": "complex_sign_r0",
           "fom": "adaptive_fom"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sweep_range(text):
    try:
        lo, hi = (int(t) for t in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return range(lo, hi + 1)


def build_parser():
    p = _Parser(prog="mlbicgstab", description="Solve A x = b from Matrix Market files with ML(n)BiCGStab.")
    p.add_argument("--matrix", required=True, help="Matrix Market file for A")
    p.add_argument("--rhs", help="Matrix Market file for b (default: b = A * ones)")
    p.add_argument("--variant", choices=("a", "b"), default="a", type=str.lower)
    p.add_argument("--n", type=int, default=4, help="number of shadow vectors")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-it", type=int, default=None, help="iteration limit (default 3N)")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--precond", choices=("none", "ilu0"), default="ilu0")
    p.add_argument("--shadow", choices=tuple(_SHADOW), default=None,
                   help="shadow block; default randn, or crandn for complex matrices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", help="write the convergence history CSV here")
    p.add_argument("--sweep", type=_sweep_range, metavar="LO..HI", help="run every n in LO..HI, print CSV")
    p.add_argument("--baseline", choices=("bicgstab",), help="also run classical BiCGStab")
    p.add_argument("--counts", action="store_true", help="print per-iteration operation counts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _exit_code(flag):
    return {0: EXIT_OK, 1: EXIT_NO_CONV}.get(flag, EXIT_BREAKDOWN)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        shadow = args.shadow
        if shadow is None:
            from .mmio import parse_matrix_market
            with open(args.matrix, encoding="ascii", errors="replace") as fh:
                header = parse_matrix_market(fh.readline(), header_only=True)
            shadow = "crandn" if header.field == "complex" else "randn"
        cfg = SolverConfig(n=args.n, tol=args.tol, max_it=args.max_it, kappa=args.kappa,
                           shadow_mode=_SHADOW[shadow], seed=args.seed, variant=args.variant)
        if args.sweep is not None:
            report = sweep_n(args.sweep, cfg, args.matrix, args.rhs, args.precond)
            report.write_csv(sys.stdout)
            return EXIT_OK if all(r.flag == 0 for r in report.rows) else _exit_code(
                next(r.flag for r in report.rows if r.flag != 0))
        res = run_single(cfg, args.matrix, args.rhs, args.precond, args.history,
                         baseline=args.baseline is not None)
    except (OSError, MatrixMarketError, InvalidArgumentError, ConfigurationError) as exc:
        print(f"mlbicgstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.precond == "ilu0":
        print(f"# ilu0 factor_seconds={res.factor_seconds:.6f} replaced_pivots={res.replaced_pivots}",
              file=sys.stderr)
    print(format_summary(res.outcome, res.true_relres))
    if res.baseline is not None:
        print("# baseline bicgstab")
        print(format_summary(res.baseline, res.baseline_true_relres))
    if args.counts:
        try:
            rep = count_report(res.outcome, cfg)
        except InsufficientDataError as exc:
            print(f"# counts: {exc}")
        else:
            for key in ("matvec", "precond", "dot", "axpy"):
                status = "ok" if rep.passed[key] else "MISMATCH"
                print(f"# {key} avg={float(rep.averages[key]):.4f} table={float(rep.expected[key]):.4f} {status}")
    return _exit_code(res.outcome.flag)


if __name__ == "__main__":
    sys.exit(main())
