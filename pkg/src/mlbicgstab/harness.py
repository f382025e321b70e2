"""Experiment runner: single solves, n-sweeps, cost reports and true errors."""

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .config import SolverConfig
from .errors import InsufficientDataError, InvalidArgumentError
from .kernel import norm2, _matvec, as_vector
from .mmio import load_rhs_or_default, read_matrix_market, write_history_csv
from .precond import make_preconditioner
from .reference import bicgstab_solve
from .stab import mlbicgstab_solve

__all__ = [
    "true_relative_error",
    "run_single",
    "RunResult",
    "sweep_n",
    "SweepRow",
    "SweepReport",
    "count_report",
    "CountReport",
    "table_costs",
    "format_summary",
]

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("n", "iters", "seconds", "true_relres", "matvecs", "flag")


def true_relative_error(A, x, b):
    """``||b - A x|| / ||b||`` (``||b||`` replaced by 1 when it is zero)."""
    b = as_vector(b)
    x = as_vector(x)
    if A.shape[1] != x.shape[0] or A.shape[0] != b.shape[0]:
        raise InvalidArgumentError("dimension mismatch in true_relative_error")
    bnrm = norm2(b)
    return norm2(b - _matvec(A, x)) / (bnrm if bnrm != 0 else 1.0)


def format_summary(outcome, true_relres):
    """``flag iter relres true_relres matvecs seconds`` on one line."""
    c = outcome.counters
    return (f"{outcome.flag} {outcome.iter} {outcome.err:.6e} {true_relres:.6e} "
            f"{c.matvec_A + c.matvec_AH} {outcome.seconds:.6f}")


@dataclass
class RunResult:
    outcome: object
    true_relres: float
    factor_seconds: float
    replaced_pivots: int = 0
    baseline: object = None
    baseline_true_relres: float = float("nan")


def _load(matrix_path, rhs_path):
    A = read_matrix_market(matrix_path)
    if not hasattr(A, "nrows"):
        raise InvalidArgumentError(f"{matrix_path}: expected a coordinate matrix")
    if A.nrows != A.ncols:
        raise InvalidArgumentError(f"{matrix_path}: matrix is {A.nrows}x{A.ncols}, not square")
    return A, load_rhs_or_default(A, rhs_path)


def _factor(A, precond):
    t0 = time.perf_counter()
    P = make_preconditioner(precond, A)
    return P, time.perf_counter() - t0


def run_single(cfg: SolverConfig, matrix, rhs=None, precond="ilu0", history=None, *, baseline=False,
               true_residual=False):
    """Load a system, factor the preconditioner and run one solve.

    ``matrix`` is a Matrix Market path or an already loaded matrix (then
    ``rhs`` may be a vector). The reported solve time excludes loading and
    factorisation.
    """
    if isinstance(matrix, (str, bytes)) or hasattr(matrix, "__fspath__"):
        A, b = _load(matrix, rhs)
    else:
        A = matrix
        b = load_rhs_or_default(A) if rhs is None else as_vector(rhs)
    P, t_fac = _factor(A, precond)
    outcome = mlbicgstab_solve(A, b, None, cfg, P, true_residual=true_residual)
    res = RunResult(outcome, true_relative_error(A, outcome.x, b), t_fac, getattr(P, "replaced_pivots", 0))
    if history is not None:
        write_history_csv(outcome.history, history)
    if baseline:
        base = bicgstab_solve(A, b, None, P, tol=cfg.tol, max_it=cfg.resolved_max_it(b.shape[0]),
                              kappa=cfg.kappa, true_residual=true_residual)
        res.baseline = base
        res.baseline_true_relres = true_relative_error(A, base.x, b)
    return res


@dataclass
class SweepRow:
    n: int
    iters: int
    seconds: float
    true_relres: float
    matvecs: int
    flag: int
    error: str | None = None


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)

    def write_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([r.n, r.iters, f"{r.seconds:.6f}", f"{r.true_relres:.16e}", r.matvecs, r.flag])
        finally:
            if own:
                fh.close()


def _sweep_seed(seed, n):
    return int(np.random.SeedSequence([seed, n]).generate_state(1, dtype=np.uint64)[0])


def sweep_n(ns, cfg: SolverConfig, matrix, rhs=None, precond="ilu0"):
    """Independent solves for each ``n`` in ``ns``; failures are recorded, not raised.

    Each ``n`` gets its own shadow seed derived from ``(cfg.seed, n)``; the
    preconditioner is factored once and shared.
    """
    ns = list(ns)
    if not ns:
        raise InvalidArgumentError("sweep needs at least one n")
    if isinstance(matrix, (str, bytes)) or hasattr(matrix, "__fspath__"):
        A, b = _load(matrix, rhs)
    else:
        A = matrix
        b = load_rhs_or_default(A) if rhs is None else as_vector(rhs)
    P, _ = _factor(A, precond)
    report = SweepReport()
    for n in ns:
        try:
            run_cfg = replace(cfg, n=n, seed=_sweep_seed(cfg.seed, n))
            out = mlbicgstab_solve(A, b, None, run_cfg, P)
            c = out.counters
            report.rows.append(SweepRow(n, out.iter, out.seconds, true_relative_error(A, out.x, b),
                                        c.matvec_A + c.matvec_AH, out.flag))
        except Exception as exc:  # noqa: BLE001 - a failed n must not end the sweep
            log.warning("sweep: n=%d failed: %s", n, exc)
            report.rows.append(SweepRow(n, 0, 0.0, float("nan"), 0, -1, error=str(exc)))
    return report


def table_costs(variant, n):
    """Per-iteration operation counts of the published cost tables.

    Returns a dict with ``matvec``, ``precond`` (exact fractions) and
    ``dot``, ``axpy`` (floats; ``axpy`` is saxpy plus vector additions).
    """
    nf = Fraction(n)
    mv = 1 + 1 / nf
    dot = n + 1 + 2 / n
    if str(variant).upper() == "A":
        axpy = max(2.5 * n + 2.5 - 2 / n, 6) + (2 - 2 / n)
    else:
        axpy = (2 * n + 2 + 2 / n) + 1
    return {"matvec": mv, "precond": mv, "dot": dot, "axpy": axpy}


@dataclass
class CountReport:
    variant: str
    n: int
    cycles: int
    averages: dict
    expected: dict
    passed: dict

    @property
    def ok(self):
        return all(self.passed.values())


def count_report(outcome, cfg: SolverConfig, slack=2.0):
    """Average operation counts per iteration over steady-state cycles.

    A steady-state window runs from the history row at ``k = j n`` to the
    row at ``k = (j + 1) n`` for ``j >= 1``; the row written by an early
    exit is not used. Matvec and preconditioner averages must equal
    ``1 + 1/n`` exactly; dot and axpy averages must lie within ``slack`` of
    the table values.
    """
    n = cfg.n
    rows = {rec.k: rec for rec in outcome.history if not rec.partial}
    windows = []
    j = 1
    while j * n in rows and (j + 1) * n in rows:
        windows.append((rows[j * n], rows[(j + 1) * n]))
        j += 1
    if len(windows) < 1:
        raise InsufficientDataError(
            f"need at least two full cycles (iter >= {2 * n}); got {outcome.iter} iterations")
    iters = n * len(windows)
    first, last = windows[0][0], windows[-1][1]
    avg = {
        "matvec": Fraction(last.matvecs - first.matvecs, iters),
        "precond": Fraction(last.precond_applies - first.precond_applies, iters),
        "dot": (last.dots - first.dots) / iters,
        "axpy": (last.axpys - first.axpys) / iters,
    }
    exp = table_costs(cfg.variant, n)
    passed = {
        "matvec": avg["matvec"] == exp["matvec"],
        "precond": avg["precond"] == exp["precond"],
        "dot": abs(avg["dot"] - exp["dot"]) <= slack,
        "axpy": abs(avg["axpy"] - exp["axpy"]) <= slack,
    }
    return CountReport(cfg.variant, n, len(windows), avg, exp, passed)
