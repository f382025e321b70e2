"""ML(n)BiCGStab solvers (variants A and B) with right preconditioning.

Both solvers keep their search directions in fixed-size column stores
(``G``, ``W``, ``D``) with cached scalars ``c``, and test for convergence
and breakdown at fixed points of each step. Column ``m`` (1-based) of a
store is list index ``m - 1`` here.

``iter`` counts k-iterations, one per residual update. ``rho`` changes
once per cycle of ``n`` iterations.
"""

import time

import numpy as np

from .config import SolverConfig, resolve_shadow
from .errors import Breakdown, InvalidArgumentError
from .kernel import as_vector, norm2
from .records import (FLAG_BREAKDOWN, FLAG_CONVERGED, FLAG_NO_CONVERGENCE, OVERFLOW_GUARD, SolverOutcome,
                      Workspace)

__all__ = ["choose_rho", "residual_check", "mlbicgstab_a_solve", "mlbicgstab_b_solve", "mlbicgstab_solve"]


def residual_check(r_norm, b_norm, tol):
    """Relative residual and the strict ``relres < tol`` test.

    A zero ``b_norm`` is replaced by 1, so the check degrades to an
    absolute one for a zero right-hand side.
    """
    denom = b_norm if b_norm != 0 else 1.0
    relres = r_norm / denom
    return relres, bool(relres < tol)


def _rho_step(ws, z, u, kappa):
    """Return ``(rho, rho_raw, abs_omega)`` for the minimisation step on ``u``.

    ``z`` is ``A M^{-1} u``. The zero checks run in a fixed order: ``z^H z``
    and ``z^H u`` are both tested before ``rho`` is formed.
    """
    zz = ws.dot(z, z).real
    if zz == 0:
        raise Breakdown("zero_Au")
    if zz < OVERFLOW_GUARD:
        raise Breakdown("tiny_Au")
    omega = ws.dot(z, u)
    if omega == 0:
        raise Breakdown("zero_omega")
    rho = -omega / zz
    raw = rho
    abs_om = float("nan")
    if kappa > 0:
        abs_om = abs(omega / (ws.norm(z) * ws.norm(u)))
        if abs_om < kappa:
            rho = rho * kappa / abs_om
    return rho, raw, abs_om


def choose_rho(Au, u, kappa=0.0):
    """Minimising ``rho`` for ``||rho*Au + u||`` with the optional kappa safeguard.

    Returns
    -------
    rho : scalar
        ``-(Au)^H u / ||Au||^2``, scaled by ``kappa / |omega|`` when
        ``kappa > 0`` and the normalised ``|omega|`` falls below ``kappa``.
    omega_abs : float
        ``|(Au)^H u| / (||Au|| ||u||)``.

    Raises
    ------
    Breakdown
        If ``Au`` is zero, or if ``(Au)^H u`` is zero while ``kappa > 0``.
    """
    Au, u = as_vector(Au), as_vector(u)
    if Au.shape != u.shape:
        raise InvalidArgumentError(f"length mismatch {Au.shape} vs {u.shape}")
    zz = float(np.vdot(Au, Au).real)
    if zz == 0:
        raise Breakdown("zero_Au")
    omega = np.vdot(Au, u)
    if omega == 0:
        if kappa > 0:
            raise Breakdown("zero_omega")
        return 0.0 * omega, 0.0
    rho = -omega / zz
    abs_om = float(abs(omega) / (np.sqrt(zz) * norm2(u)))
    if kappa > 0 and abs_om < kappa:
        rho = rho * kappa / abs_om
    return rho, abs_om


class _Run:
    """Mutable per-solve state shared by both variants."""

    def __init__(self, ws, x, cfg, Q):
        self.ws = ws
        self.x = x
        self.cfg = cfg
        self.Q = Q
        self.iter = 0
        self.err = float("nan")
        self.rhos, self.raws, self.omegas = [], [], []

    def step_done(self, r):
        """Bookkeeping after a residual update; returns a flag to stop or None."""
        ws = self.ws
        self.iter += 1
        self.err = ws.relres(ws.norm(r))
        ws.record(self.iter, self.err, self.x)
        ws.emit("r", self.iter, r)
        ws.emit("x", self.iter, self.x)
        if self.err < ws.tol:
            return FLAG_CONVERGED
        if self.iter >= ws.max_it:
            return FLAG_NO_CONVERGENCE
        return None

    def early_exit(self, u):
        """Convergence test on ``u`` before the rho step (exit there if met)."""
        ws = self.ws
        self.err = ws.relres(ws.norm(u))
        if self.err < ws.tol:
            self.iter += 1
            ws.record(self.iter, self.err, self.x, partial=True)
            ws.emit("x", self.iter, self.x)
            return True
        return False

    def rho_step(self, z, u, k):
        rho, raw, abs_om = _rho_step(self.ws, z, u, self.cfg.kappa)
        self.rhos.append(rho)
        self.raws.append(raw)
        self.omegas.append(abs_om)
        self.ws.emit("rho", k, rho)
        return rho


def _check_c(value, name="c"):
    if value == 0:
        raise Breakdown(f"zero_{name}")
    if abs(value) < OVERFLOW_GUARD:
        raise Breakdown(f"tiny_{name}")
    return value


def _prepare(A, b, x0, cfg, P, observer, true_residual):
    if cfg is None:
        cfg = SolverConfig()
    b = as_vector(b)
    N = b.shape[0]
    if A.shape != (N, N):
        raise InvalidArgumentError(f"A has shape {A.shape}, right-hand side has length {N}")
    if getattr(A, "is_complex", np.iscomplexobj(A)):
        b = b.astype(np.complex128)
    x = np.zeros_like(b) if x0 is None else as_vector(x0, b.dtype).copy()
    if x.shape != b.shape:
        raise InvalidArgumentError(f"x0 has length {x.shape[0]}, expected {N}")
    if P is not None and getattr(P, "n", N) != N:
        raise InvalidArgumentError(f"preconditioner has size {P.n}, system has {N}")
    ws = Workspace(A, b, P, tol=cfg.tol, max_it=cfg.resolved_max_it(N), observer=observer,
                   true_residual=true_residual)
    return cfg, ws, x


def _solve(method, body, A, b, x0, cfg, P, observer, true_residual):
    cfg, ws, x = _prepare(A, b, x0, cfg, P, observer, true_residual)
    t0 = time.perf_counter()
    r = ws.sub(b, ws.matvec(x))
    err = ws.relres(ws.norm(r))
    ws.record(0, err, x)
    ws.emit("r", 0, r)
    ws.emit("x", 0, x)
    block = resolve_shadow(cfg, r, b.shape[0])
    run = _Run(ws, x, cfg, block.Q)
    run.err = err
    flag, reason = FLAG_CONVERGED, None
    if not err < ws.tol:
        try:
            flag = body(run, r, block.adaptive)
        except Breakdown as exc:
            flag, reason = FLAG_BREAKDOWN, exc.reason
    return SolverOutcome(
        x=run.x, err=float(run.err), iter=run.iter, flag=flag, history=ws.history, counters=ws.counters,
        rho_history=run.rhos, rho_raw_history=run.raws, omega_history=run.omegas, breakdown=reason,
        shadow=block.Q, method=method, seconds=time.perf_counter() - t0)


def _variant_a(run, r, adaptive):
    ws, Q, n = run.ws, run.Q, run.cfg.n
    q1 = Q[:, 0]
    G, W = [None] * n, [None] * n
    D = [None] * max(n - 2, 0)
    c = [0.0] * n

    G[n - 1] = r
    g_t = ws.precond(r)
    W[n - 1] = ws.matvec(g_t)
    c[n - 1] = _check_c(ws.dot(q1, W[n - 1]))
    e = ws.dot(q1, r)

    j = 0
    while True:
        # cycle head, k = j*n + 1
        alpha = e / c[n - 1]
        run.x = ws.axpy(alpha, g_t, run.x)
        u = ws.axpy(-alpha, W[n - 1], r)
        ws.emit("u", j * n + 1, u)
        if run.early_exit(u):
            return FLAG_CONVERGED
        g_t = ws.precond(u)
        z = ws.matvec(g_t)
        rho = run.rho_step(z, u, j * n + 1)
        run.x = ws.axpy(-rho, g_t, run.x)
        r = ws.axpy(rho, z, u)
        if (flag := run.step_done(r)) is not None:
            return flag

        for i in range(1, n):
            if adaptive and j == 0:
                Q[:, i] = u
            qi1 = Q[:, i]
            f = ws.dot(qi1, u)
            if j >= 1:
                beta = -f / c[i - 1]
                if i <= n - 2:
                    D[i - 1] = ws.axpy(beta, D[i - 1], u)
                    G[i - 1] = ws.scale(beta, G[i - 1])
                    W[i - 1] = ws.scale(beta, W[i - 1])
                    beta = -ws.dot(Q[:, i + 1], D[i - 1]) / c[i]
                    for s in range(i + 1, n - 1):
                        D[i - 1] = ws.axpy(beta, D[s - 1], D[i - 1])
                        G[i - 1] = ws.axpy(beta, G[s - 1], G[i - 1])
                        W[i - 1] = ws.axpy(beta, W[s - 1], W[i - 1])
                        beta = -ws.dot(Q[:, s + 1], D[i - 1]) / c[s]
                    G[i - 1] = ws.axpy(beta, G[n - 2], G[i - 1])
                    W[i - 1] = ws.axpy(beta, W[n - 2], W[i - 1])
                    W[i - 1] = ws.axpy(rho, W[i - 1], r)
                else:
                    G[i - 1] = ws.scale(beta, G[n - 2])
                    W[i - 1] = ws.axpy(rho * beta, W[n - 2], r)
                beta = -ws.dot(q1, W[i - 1]) / c[n - 1]
                W[i - 1] = ws.axpy(beta, W[n - 1], W[i - 1])
                G[i - 1] = ws.axpy(beta / rho, G[n - 1], ws.add(G[i - 1], W[i - 1]))
            else:
                beta = -ws.dot(q1, r) / c[n - 1]
                W[i - 1] = ws.axpy(beta, W[n - 1], r)
                G[i - 1] = ws.axpy(beta / rho, G[n - 1], W[i - 1])
            for s in range(1, i):
                beta = -ws.dot(Q[:, s], W[i - 1]) / c[s - 1]
                G[i - 1] = ws.axpy(beta, G[s - 1], G[i - 1])
                W[i - 1] = ws.axpy(beta, D[s - 1], W[i - 1])
            if i < n - 1:
                D[i - 1] = ws.sub(W[i - 1], u)
                ws.emit("d", j * n + i, D[i - 1])
                c[i - 1] = _check_c(ws.dot(qi1, D[i - 1]))
                ws.emit("c", j * n + i, c[i - 1])
                alpha = f / c[i - 1]
                u = ws.axpy(-alpha, D[i - 1], u)
                ws.emit("u", j * n + i + 1, u)
            else:
                c[i - 1] = _check_c(ws.dot(qi1, ws.sub(W[i - 1], u)))
                alpha = f / c[i - 1]
            g_t = ws.precond(G[i - 1])
            W[i - 1] = ws.matvec(g_t)
            alpha = rho * alpha
            run.x = ws.axpy(alpha, g_t, run.x)
            r = ws.axpy(-alpha, W[i - 1], r)
            if (flag := run.step_done(r)) is not None:
                return flag

        # cycle tail: refresh the n-th direction for the next cycle
        e = ws.dot(q1, r)
        beta = -e / c[n - 1]
        W[n - 1] = ws.axpy(beta, W[n - 1], r)
        G[n - 1] = ws.axpy(beta / rho, G[n - 1], W[n - 1])
        if n >= 2:
            beta = -ws.dot(Q[:, 1], W[n - 1]) / c[0]
            for s in range(1, n - 1):
                G[n - 1] = ws.axpy(beta, G[s - 1], G[n - 1])
                W[n - 1] = ws.axpy(beta, D[s - 1], W[n - 1])
                beta = -ws.dot(Q[:, s + 1], W[n - 1]) / c[s]
            G[n - 1] = ws.axpy(beta, G[n - 2], G[n - 1])
        g_t = ws.precond(G[n - 1])
        W[n - 1] = ws.matvec(g_t)
        c[n - 1] = _check_c(ws.dot(q1, W[n - 1]))
        j += 1


def _variant_b(run, r, adaptive):
    ws, Q, n = run.ws, run.Q, run.cfg.n
    q1 = Q[:, 0]
    G, W = [None] * n, [None] * n
    c = [0.0] * n
    rho = None

    G[0] = ws.precond(r)
    W[0] = ws.matvec(G[0])
    c[0] = _check_c(ws.dot(q1, W[0]))
    e = ws.dot(q1, r)

    j = 0
    while True:
        for i in range(1, n):
            alpha = e / c[i - 1]
            run.x = ws.axpy(alpha, G[i - 1], run.x)
            r = ws.axpy(-alpha, W[i - 1], r)
            if (flag := run.step_done(r)) is not None:
                return flag
            if adaptive and j == 0:
                Q[:, i] = r
            e = ws.dot(Q[:, i], r)
            if j >= 1:
                beta = -e / c[i]
                W[i] = ws.axpy(beta, W[i], r)
                G[i] = ws.scale(beta, G[i])
                for s in range(i + 1, n):
                    beta = -ws.dot(Q[:, s], W[i]) / c[s]
                    W[i] = ws.axpy(beta, W[s], W[i])
                    G[i] = ws.axpy(beta, G[s], G[i])
                G[i] = ws.axpy(1 / rho, G[i], ws.precond(W[i]))
            else:
                G[i] = ws.precond(r)
            W[i] = ws.matvec(G[i])
            for s in range(i):
                beta = -ws.dot(Q[:, s], W[i]) / c[s]
                W[i] = ws.axpy(beta, W[s], W[i])
                G[i] = ws.axpy(beta, G[s], G[i])
            ws.emit("w", j * n + i + 1, W[i])
            c[i] = _check_c(ws.dot(Q[:, i], W[i]))
            ws.emit("c", j * n + i + 1, c[i])

        # cycle end, k = j*n + n: last Lanczos step, then the rho step
        k = j * n + n
        alpha = e / c[n - 1]
        run.x = ws.axpy(alpha, G[n - 1], run.x)
        r = ws.axpy(-alpha, W[n - 1], r)
        ws.emit("u", k, r)
        if run.early_exit(r):
            return FLAG_CONVERGED
        u_t = ws.precond(r)
        z = ws.matvec(u_t)
        rho = run.rho_step(z, r, k)
        run.x = ws.axpy(-rho, u_t, run.x)
        r = ws.axpy(rho, z, r)
        if (flag := run.step_done(r)) is not None:
            return flag

        e = ws.dot(q1, r)
        beta = -e / c[0]
        W[0] = ws.axpy(beta, W[0], r)
        G[0] = ws.scale(beta, G[0])
        for s in range(1, n):
            beta = -ws.dot(Q[:, s], W[0]) / c[s]
            W[0] = ws.axpy(beta, W[s], W[0])
            G[0] = ws.axpy(beta, G[s], G[0])
        G[0] = ws.axpy(1 / rho, G[0], ws.precond(W[0]))
        W[0] = ws.matvec(G[0])
        c[0] = _check_c(ws.dot(q1, W[0]))
        j += 1


def mlbicgstab_a_solve(A, b, x0=None, cfg=None, P=None, *, observer=None, true_residual=False):
    """Solve ``A x = b`` with ML(n)BiCGStab, residual definition A.

    Parameters
    ----------
    A : CsrMatrix or ndarray
        Square system matrix.
    b : array_like
        Right-hand side.
    x0 : array_like, optional
        Initial guess (zeros by default).
    cfg : SolverConfig, optional
        ``n``, ``tol``, ``max_it``, ``kappa`` and the shadow policy.
    P : preconditioner, optional
        Object with ``apply(v) -> M^{-1} v``; identity when omitted.
    observer : callable, optional
        Called as ``observer(name, k, value)`` for intermediate vectors
        (``"r"``, ``"u"``, ``"d"``, ``"x"``) and for the scalars ``"rho"``
        and ``"c"`` (``c = q^H d`` paired with each emitted ``"d"``).
    true_residual : bool
        Also record ``||b - A x_k|| / ||b||`` in every history row.

    Returns
    -------
    SolverOutcome
    """
    return _solve("mlbicgstab-A", _variant_a, A, b, x0, cfg, P, observer, true_residual)


def mlbicgstab_b_solve(A, b, x0=None, cfg=None, P=None, *, observer=None, true_residual=False):
    """Solve ``A x = b`` with ML(n)BiCGStab, residual definition B.

    Same interface as :func:`mlbicgstab_a_solve`. Here ``rho`` is chosen at
    the end of each cycle and the observer sees ``"r"``, ``"u"``, ``"w"``,
    ``"x"``, ``"rho"`` and ``"c"`` (``c = q^H w`` for each emitted ``"w"``).
    """
    return _solve("mlbicgstab-B", _variant_b, A, b, x0, cfg, P, observer, true_residual)


def mlbicgstab_solve(A, b, x0=None, cfg=None, P=None, **kwargs):
    """Dispatch on ``cfg.variant``."""
    cfg = cfg or SolverConfig()
    solver = mlbicgstab_a_solve if cfg.variant == "A" else mlbicgstab_b_solve
    return solver(A, b, x0, cfg, P, **kwargs)
