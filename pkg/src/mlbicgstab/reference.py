"""Reference methods: right-preconditioned BiCGStab and ML(n)BiCG.

ML(n)BiCG is implemented literally, without the cost-saving rewrites of
the stabilised solvers, because it serves as an oracle for them.
"""

import time
from collections import deque
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .config import ShadowBlock
from .errors import Breakdown, ConfigurationError, InvalidArgumentError
from .index_maps import r_index
from .kernel import as_vector, spmv_adjoint, CsrMatrix
from .records import FLAG_BREAKDOWN, FLAG_CONVERGED, FLAG_NO_CONVERGENCE, SolverOutcome, Workspace
from .stab import _check_c, _rho_step

__all__ = ["bicgstab_solve", "mlbicg_solve", "MlBicgState", "next_shadow_p"]


def _workspace(A, b, x0, P, tol, max_it, observer, true_residual):
    if np.asarray(b).dtype == object:
        return _mp_workspace(A, b, x0, tol, max_it, observer)
    b = as_vector(b)
    N = b.shape[0]
    if A.shape != (N, N):
        raise InvalidArgumentError(f"A has shape {A.shape}, right-hand side has length {N}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol!r}")
    if getattr(A, "is_complex", np.iscomplexobj(A)):
        b = b.astype(np.complex128)
    x = np.zeros_like(b) if x0 is None else as_vector(x0, b.dtype).copy()
    if x.shape != b.shape:
        raise InvalidArgumentError(f"x0 has length {x.shape[0]}, expected {N}")
    max_it = 3 * N if max_it is None else int(max_it)
    ws = Workspace(A, b, P, tol=tol, max_it=max_it, observer=observer, true_residual=true_residual)
    return ws, x


def _mp_workspace(A, b, x0, tol, max_it, observer):
    N = b.shape[0]
    x = b * 0 if x0 is None else np.asarray(x0)
    max_it = 3 * N if max_it is None else int(max_it)
    return Workspace(A, b, None, tol=tol, max_it=max_it, observer=observer), x


def _to_mp(a):
    a = np.asarray(a)
    conv = mpmath.mpc if np.iscomplexobj(a) else mpmath.mpf
    return np.vectorize(lambda t: conv(t), otypes=[object])(a) if a.size else a.astype(object)


def _from_mp(a):
    a = np.asarray(a)
    if a.dtype != object:
        return a
    if any(isinstance(t, mpmath.mpc) for t in a.flat):
        return np.array([complex(t) for t in a.flat], dtype=np.complex128).reshape(a.shape)
    return np.array([float(t) for t in a.flat]).reshape(a.shape)


def bicgstab_solve(A, b, x0=None, P=None, tol=1e-7, max_it=None, kappa=0.0, *, shadow=None,
                   observer=None, true_residual=False):
    """Classical BiCGStab with right preconditioning.

    The stabilising step uses the same rho rule (and kappa safeguard) as the
    ML(n)BiCGStab solvers: ``x -= rho * M^{-1} s`` and ``r = s + rho * t``,
    so ``rho`` is minus the textbook ``omega``. ``shadow`` is the fixed
    left vector (the initial residual when omitted).
    """
    ws, x = _workspace(A, b, x0, P, tol, max_it, observer, true_residual)
    t0 = time.perf_counter()
    r = ws.sub(ws.b, ws.matvec(x))
    err = ws.relres(ws.norm(r))
    ws.record(0, err, x)
    rt = r.copy() if shadow is None else as_vector(shadow, r.dtype)
    if rt.shape != r.shape:
        raise InvalidArgumentError("shadow vector has the wrong length")
    it, flag, reason = 0, FLAG_CONVERGED, None
    rhos, raws, omegas = [], [], []
    if not err < tol:
        flag = FLAG_NO_CONVERGENCE
        try:
            p = v = None
            rho_prev = alpha = rho = None
            while it < ws.max_it:
                sigma1 = ws.dot(rt, r)
                _check_c(sigma1, "rt_r")
                if p is None:
                    p = r
                else:
                    beta = -(sigma1 / rho_prev) * (alpha / rho)
                    p = ws.axpy(beta, ws.axpy(rho, v, p), r)
                phat = ws.precond(p)
                v = ws.matvec(phat)
                alpha = sigma1 / _check_c(ws.dot(rt, v))
                x = ws.axpy(alpha, phat, x)
                s = ws.axpy(-alpha, v, r)
                err = ws.relres(ws.norm(s))
                if err < tol:
                    it += 1
                    ws.record(it, err, x, partial=True)
                    flag = FLAG_CONVERGED
                    break
                shat = ws.precond(s)
                t = ws.matvec(shat)
                rho, raw, abs_om = _rho_step(ws, t, s, kappa)
                rhos.append(rho), raws.append(raw), omegas.append(abs_om)
                x = ws.axpy(-rho, shat, x)
                r = ws.axpy(rho, t, s)
                rho_prev = sigma1
                it += 1
                err = ws.relres(ws.norm(r))
                ws.record(it, err, x)
                ws.emit("r", it, r)
                if err < tol:
                    flag = FLAG_CONVERGED
                    break
        except Breakdown as exc:
            flag, reason = FLAG_BREAKDOWN, exc.reason
    return SolverOutcome(x=x, err=float(err), iter=it, flag=flag, history=ws.history, counters=ws.counters,
                         rho_history=rhos, rho_raw_history=raws, omega_history=omegas, breakdown=reason,
                         shadow=rt, method="bicgstab", seconds=time.perf_counter() - t0)


@dataclass
class MlBicgState:
    """Iteration state of ML(n)BiCG after step ``k``.

    ``ghat_ring`` holds ``(g_s, A g_s)`` for the last ``n`` indices ``s``;
    ``p_ring[r_n(s) - 1]`` holds the newest ``p_s`` with that residue.
    """

    n: int
    xhat: np.ndarray
    rhat: np.ndarray
    ghat_ring: deque
    p_ring: list
    k: int = 0
    alpha: complex | float = 0.0
    betas: list = field(default_factory=list)


def next_shadow_p(state, A, Q, k, ws=None):
    """Return ``p_k = (A^H)^{g_n(k)} q_{r_n(k)}`` and store it in the ring.

    For ``k <= n`` this is ``q_k``; afterwards it is ``A^H p_{k-n}``, whose
    ring slot it overwrites (one adjoint product).
    """
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    Qm = Q.Q if isinstance(Q, ShadowBlock) else np.asarray(Q)
    n = state.n
    slot = r_index(n, k) - 1
    if k <= n:
        p = Qm[:, k - 1].copy()
    elif ws is not None:
        p = ws.matvec_h(state.p_ring[slot])
    elif isinstance(A, CsrMatrix):
        p = spmv_adjoint(A, state.p_ring[slot])
    else:
        p = np.asarray(A).conj().T @ state.p_ring[slot]
    state.p_ring[slot] = p
    return p


def mlbicg_solve(A, b, x0=None, Q=None, tol=1e-7, max_it=None, *, adaptive=False, observer=None,
                 true_residual=False, dps=None):
    """ML(n)BiCG with the shadow block ``Q`` (``N x n`` array or :class:`ShadowBlock`).

    With ``adaptive=True`` (or an ``adaptive_fom`` block) column ``k+1`` of
    ``Q`` is set to ``rhat_k`` as the iteration proceeds, which requires
    ``max_it <= n``. The observer receives ``"r"``, ``"x"``, ``"g"`` and
    ``"p"`` vectors indexed by ``k``.

    The repeated ``A^H`` products make the recurrence sensitive to rounding.
    Passing ``dps`` (decimal digits) runs the identical recurrence in
    mpmath arithmetic on a dense copy of ``A``; vectors handed to the
    observer and the returned ``x`` are rounded back to double precision.
    """
    if Q is None:
        raise InvalidArgumentError("mlbicg_solve needs a shadow block Q")
    if dps is not None:
        if isinstance(Q, ShadowBlock):
            adaptive, Q = adaptive or Q.adaptive, Q.Q
        Ad = A.to_dense() if isinstance(A, CsrMatrix) else np.asarray(A)
        wrapped = None if observer is None else (lambda name, k, v: observer(name, k, _from_mp(v)))
        with mpmath.workdps(dps):
            out = mlbicg_solve(_to_mp(Ad), _to_mp(b), None if x0 is None else _to_mp(x0), _to_mp(Q), tol,
                               max_it, adaptive=adaptive, observer=wrapped)
        out.x, out.shadow = _from_mp(out.x), _from_mp(out.shadow)
        return out
    if isinstance(Q, ShadowBlock):
        adaptive = adaptive or Q.adaptive
        Qm = Q.Q
    else:
        Qm = np.array(Q, copy=True)
        if Qm.ndim == 1:
            Qm = Qm[:, None]
    ws, x = _workspace(A, b, x0, None, tol, max_it, observer, true_residual)
    N, n = Qm.shape
    if N != x.shape[0]:
        raise InvalidArgumentError(f"Q has {N} rows, system has {x.shape[0]}")
    if adaptive and ws.max_it > n:
        raise ConfigurationError(f"adaptive shadows need max_it <= n (got {ws.max_it} > {n})")
    if adaptive and Qm.dtype.kind != "c" and np.iscomplexobj(x):
        Qm = Qm.astype(np.complex128)
    t0 = time.perf_counter()
    r = ws.sub(ws.b, ws.matvec(x))
    err = ws.relres(ws.norm(r))
    ws.record(0, err, x)
    ws.emit("r", 0, r)
    ws.emit("x", 0, x)
    if adaptive:
        Qm[:, 0] = r
    state = MlBicgState(n=n, xhat=x, rhat=r, ghat_ring=deque(maxlen=n), p_ring=[None] * n)
    state.ghat_ring.append((r, ws.matvec(r)))
    flag, reason = FLAG_CONVERGED, None
    if not err < tol:
        flag = FLAG_NO_CONVERGENCE
        try:
            p = next_shadow_p(state, A, Qm, 1, ws)
            ws.emit("p", 1, p)
            for k in range(1, ws.max_it + 1):
                g_prev, Ag_prev = state.ghat_ring[-1]
                alpha = ws.dot(p, state.rhat) / _check_c(ws.dot(p, Ag_prev))
                state.xhat = ws.axpy(alpha, g_prev, state.xhat)
                state.rhat = ws.axpy(-alpha, Ag_prev, state.rhat)
                state.k, state.alpha = k, alpha
                err = ws.relres(ws.norm(state.rhat))
                ws.record(k, err, state.xhat)
                ws.emit("r", k, state.rhat)
                ws.emit("x", k, state.xhat)
                if err < tol:
                    flag = FLAG_CONVERGED
                    break
                if k == ws.max_it:
                    break
                # beta loop over s = max(k-n, 0) .. k-1, oldest first
                z = state.rhat
                Az = ws.matvec(z)
                betas = []
                first = max(k - n, 0)
                for s, (g_s, Ag_s) in enumerate(state.ghat_ring, start=k - len(state.ghat_ring)):
                    if s < first:
                        continue
                    p_s1 = state.p_ring[r_index(n, s + 1) - 1]
                    beta = -ws.dot(p_s1, Az) / _check_c(ws.dot(p_s1, Ag_s))
                    z = ws.axpy(beta, g_s, z)
                    Az = ws.axpy(beta, Ag_s, Az)
                    betas.append(beta)
                state.betas = betas
                state.ghat_ring.append((z, Az))
                ws.emit("g", k, z)
                if adaptive and k + 1 <= n:
                    Qm[:, k] = state.rhat
                p = next_shadow_p(state, A, Qm, k + 1, ws)
                ws.emit("p", k + 1, p)
        except Breakdown as exc:
            flag, reason = FLAG_BREAKDOWN, exc.reason
    return SolverOutcome(x=state.xhat, err=float(err), iter=state.k, flag=flag, history=ws.history,
                         counters=ws.counters, breakdown=reason, shadow=Qm, method="mlbicg",
                         seconds=time.perf_counter() - t0)
