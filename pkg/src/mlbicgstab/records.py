"""Solver result types and the operation-counting workspace solvers run on."""

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import kernel
from .errors import Breakdown

__all__ = [
    "OpCounters",
    "ConvergenceRecord",
    "SolverOutcome",
    "FLAG_CONVERGED",
    "FLAG_NO_CONVERGENCE",
    "FLAG_BREAKDOWN",
    "OVERFLOW_GUARD",
]

FLAG_CONVERGED = 0
FLAG_NO_CONVERGENCE = 1
FLAG_BREAKDOWN = -1

# Divisors below this magnitude are treated like exact zeros.
OVERFLOW_GUARD = 1e-290


@dataclass
class OpCounters:
    """Cumulative kernel-call counts for one solve.

    ``axpys`` counts every vector update (``a*x + y``, ``x + y``, ``a*x``);
    ``norms`` are kept apart from ``dots`` because the cost tables count
    only inner products of two distinct vectors.
    """

    matvec_A: int = 0
    matvec_AH: int = 0
    precond_applies: int = 0
    dots: int = 0
    axpys: int = 0
    norms: int = 0

    def snapshot(self):
        return replace(self)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ConvergenceRecord:
    """One row of a convergence history.

    ``true_relres`` is NaN unless the solve was asked to track it.
    ``partial`` marks a final row written at an early exit that skipped
    the remaining work of its step.
    """

    k: int
    relres: float
    true_relres: float = float("nan")
    matvecs: int = 0
    precond_applies: int = 0
    wall_ns: int = 0
    dots: int = 0
    axpys: int = 0
    partial: bool = False


@dataclass
class SolverOutcome:
    """What a solve returns.

    ``flag`` is 0 (converged), 1 (iteration limit) or -1 (breakdown);
    ``err`` is the last computed relative residual and ``iter`` the number
    of k-iterations performed. ``history[0]`` is the k = 0 row.
    """

    x: np.ndarray
    err: float
    iter: int
    flag: int
    history: list = field(default_factory=list)
    counters: OpCounters = field(default_factory=OpCounters)
    rho_history: list = field(default_factory=list)
    rho_raw_history: list = field(default_factory=list)
    omega_history: list = field(default_factory=list)
    breakdown: str | None = None
    shadow: np.ndarray | None = None
    method: str = ""
    seconds: float = 0.0

    @property
    def converged(self):
        return self.flag == FLAG_CONVERGED


class Workspace:
    """Counted kernels plus history bookkeeping shared by every solver.

    Solvers route all operator applications, inner products and vector
    updates through this object so :class:`OpCounters` reflects exactly
    what the recurrence did.
    """

    def __init__(self, A, b, P=None, *, tol, max_it, observer=None, true_residual=False):
        self.A = A
        self.P = P
        self.b = b
        self.tol = tol
        self.max_it = max_it
        self.observer = observer
        self.true_residual = true_residual
        self.counters = OpCounters()
        self.history = []
        self.bnrm2 = kernel.norm2(b)
        if self.bnrm2 == 0.0:
            self.bnrm2 = 1.0
        self._t0 = time.perf_counter_ns()

    # -- counted kernels -------------------------------------------------
    def matvec(self, v):
        self.counters.matvec_A += 1
        return kernel._matvec(self.A, v)

    def matvec_h(self, v):
        self.counters.matvec_AH += 1
        if isinstance(self.A, kernel.CsrMatrix):
            return kernel.spmv_adjoint(self.A, v)
        return self.A.conj().T @ v

    def precond(self, v):
        self.counters.precond_applies += 1
        if self.P is None:
            return v.copy()
        return self.P.apply(v)

    def dot(self, u, v):
        self.counters.dots += 1
        return kernel.dot(u, v)

    def norm(self, v):
        self.counters.norms += 1
        return kernel.norm2(v)

    def axpy(self, a, x, y):
        """``a*x + y``."""
        self.counters.axpys += 1
        return a * x + y

    def add(self, x, y):
        self.counters.axpys += 1
        return x + y

    def sub(self, x, y):
        self.counters.axpys += 1
        return x - y

    def scale(self, a, x):
        self.counters.axpys += 1
        return a * x

    # -- bookkeeping -----------------------------------------------------
    def divide(self, num, den, name):
        """``num / den`` after the zero and overflow-guard checks on ``den``."""
        if den == 0:
            raise Breakdown(f"zero_{name}")
        if abs(den) < OVERFLOW_GUARD:
            raise Breakdown(f"tiny_{name}")
        return num / den

    def relres(self, rnorm):
        return rnorm / self.bnrm2

    def record(self, k, relres, x=None, partial=False):
        true_rel = float("nan")
        if self.true_residual and x is not None:
            true_rel = kernel.norm2(self.b - kernel._matvec(self.A, x)) / self.bnrm2
        c = self.counters
        self.history.append(ConvergenceRecord(
            k=k, relres=float(relres), true_relres=true_rel, matvecs=c.matvec_A + c.matvec_AH,
            precond_applies=c.precond_applies, wall_ns=time.perf_counter_ns() - self._t0,
            dots=c.dots, axpys=c.axpys, partial=partial))
        if not np.isfinite(relres):
            raise Breakdown("non_finite")

    def emit(self, name, k, value):
        if self.observer is not None:
            self.observer(name, k, value)

    def elapsed(self):
        return (time.perf_counter_ns() - self._t0) * 1e-9
