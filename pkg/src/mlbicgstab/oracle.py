"""Dense brute-force objects used to check the iterative solvers.

Everything here works on small dense matrices (N up to a few hundred)
and is independent of the solver recurrences.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgumentError, SingularMatrixError
from .kernel import CsrMatrix, as_vector
from .records import OpCounters

__all__ = [
    "PhiPoly",
    "apply_phi",
    "krylov_basis",
    "minimal_poly_degree",
    "MomentMatrices",
    "moment_determinants",
    "shadow_sequence",
    "dense_lu_solve",
]


def _dense(A):
    if isinstance(A, CsrMatrix):
        return A.to_dense()
    return np.asarray(A)


@dataclass(frozen=True)
class PhiPoly:
    """``phi_j(x) = prod_t (rho_t x + 1)`` for ``rhos = (rho_1, ..., rho_j)``."""

    rhos: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rhos", tuple(self.rhos))

    @property
    def degree(self):
        return len(self.rhos)

    def truncated(self, j):
        """``phi_j`` built from the first ``j`` factors."""
        if not 0 <= j <= len(self.rhos):
            raise InvalidArgumentError(f"degree {j} outside [0, {len(self.rhos)}]")
        return PhiPoly(self.rhos[:j])

    def coefficients(self):
        """Monomial coefficients, constant term first."""
        coef = np.array([1.0], dtype=np.result_type(float, *[np.asarray(r).dtype for r in self.rhos]))
        for rho in self.rhos:
            coef = np.concatenate([coef, [0]]) + rho * np.concatenate([[0], coef])
        return coef

    def __call__(self, lam):
        out = np.ones_like(np.asarray(lam), dtype=np.result_type(lam, *self.rhos, float))
        for rho in self.rhos:
            out = out * (rho * np.asarray(lam) + 1)
        return out


def apply_phi(phi, A, v, counters: OpCounters | None = None):
    """``phi(A) v`` applied factor by factor, one matvec per factor."""
    if not isinstance(phi, PhiPoly):
        phi = PhiPoly(phi)
    Ad = A if isinstance(A, CsrMatrix) else np.asarray(A)
    out = as_vector(v).copy()
    for rho in phi.rhos:
        Av = Ad @ out
        if counters is not None:
            counters.matvec_A += 1
        out = rho * Av + out
    return out


def krylov_basis(A, v, t):
    """Columns ``v, A v, ..., A^{t-1} v`` (raw powers)."""
    if t < 1:
        raise InvalidArgumentError(f"t must be >= 1, got {t}")
    Ad = _dense(A)
    v = as_vector(v)
    K = np.empty((v.shape[0], t), dtype=np.result_type(Ad.dtype, v.dtype))
    K[:, 0] = v
    for i in range(1, t):
        K[:, i] = Ad @ K[:, i - 1]
    return K


def minimal_poly_degree(A, r0, tol_rank=1e-10):
    """Degree of the minimal polynomial of ``r0`` with respect to ``A``.

    The Krylov vectors are normalised before the SVD so that the relative
    rank test is not swamped by the growth of raw powers; the result is the
    first ``d`` at which ``A^d r0`` adds no new direction.
    """
    Ad = _dense(A)
    r0 = as_vector(r0)
    if not np.any(r0):
        raise InvalidArgumentError("r0 must be nonzero")
    N = r0.shape[0]
    cols = [r0 / np.linalg.norm(r0)]
    for d in range(1, N + 1):
        w = Ad @ cols[-1]
        nw = np.linalg.norm(w)
        if nw == 0:
            return d
        cols.append(w / nw)
        s = np.linalg.svd(np.column_stack(cols), compute_uv=False)
        if s[-1] <= tol_rank * s[0]:
            return d
    return N


def shadow_sequence(A, Q, count):
    """``p_1, ..., p_count`` with ``p_k = (A^H)^{g_n(k)} q_{r_n(k)}``, as rows."""
    Ad = _dense(A)
    Q = np.asarray(Q)
    if Q.ndim == 1:
        Q = Q[:, None]
    n = Q.shape[1]
    AH = Ad.conj().T
    ps = []
    for k in range(1, count + 1):
        ps.append(Q[:, k - 1].copy() if k <= n else AH @ ps[k - n - 1])
    return np.array(ps)


@dataclass
class MomentMatrices:
    """``S_hat`` and ``W_hat`` with their leading principal determinants."""

    S_hat: np.ndarray
    W_hat: np.ndarray
    det_S: np.ndarray
    det_W: np.ndarray
    nu: int

    @property
    def nonsingular(self):
        return bool(np.all(self.det_S != 0) and np.all(self.det_W != 0))


def _det(M):
    """Determinant via partial-pivoting LU (0 when a pivot vanishes)."""
    if M.size == 0:
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=True)
    sign = (-1) ** int(np.sum(piv != np.arange(piv.size)))
    return sign * np.prod(np.diag(lu))


def moment_determinants(A, r0, Q, nu=None):
    """Moment matrices ``W_hat[l, t] = p_l^H A^{t-1} r0`` and ``S_hat[l, t] = p_l^H A^t r0``.

    ``l, t = 1..nu`` with ``nu`` the minimal-polynomial degree of ``r0``
    unless given. Returns all leading principal determinants.
    """
    Ad = _dense(A)
    r0 = as_vector(r0)
    if nu is None:
        nu = minimal_poly_degree(Ad, r0)
    P = shadow_sequence(Ad, Q, nu)
    K = krylov_basis(Ad, r0, nu + 1)
    W_hat = P.conj() @ K[:, :nu]
    S_hat = P.conj() @ K[:, 1:nu + 1]
    det_S = np.array([_det(S_hat[:l, :l]) for l in range(1, nu + 1)])
    det_W = np.array([_det(W_hat[:l, :l]) for l in range(1, nu + 1)])
    return MomentMatrices(S_hat, W_hat, det_S, det_W, nu)


def dense_lu_solve(A, b):
    """Solve with partial-pivoting LU; raise :class:`SingularMatrixError` on a pivot below 1e-300."""
    Ad = _dense(A)
    if Ad.ndim != 2 or Ad.shape[0] != Ad.shape[1]:
        raise InvalidArgumentError(f"dense_lu_solve needs a square matrix, got shape {Ad.shape}")
    b = as_vector(b)
    if b.shape[0] != Ad.shape[0]:
        raise InvalidArgumentError("right-hand side length does not match")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(Ad)
    if np.min(np.abs(np.diag(lu))) < 1e-300:
        raise SingularMatrixError("matrix is numerically singular")
    return sla.lu_solve((lu, piv), b)
