"""Shared test fixtures: random instances, model problems, observers."""

from collections import defaultdict

import numpy as np
import scipy.sparse as sp

from mlbicgstab import CsrMatrix


def shifted_gaussian(seed, N, shift=3.0):
    """``shift * I + G / sqrt(N)``: spectrum inside the unit disk around ``shift``."""
    rng = np.random.default_rng(seed)
    A = shift * np.eye(N) + rng.standard_normal((N, N)) / np.sqrt(N)
    b = rng.standard_normal(N)
    return A, b


def poisson2d(m):
    """5-point Laplacian on an ``m x m`` grid (N = m^2)."""
    T = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(m, m))
    I = sp.eye(m)
    return CsrMatrix.from_scipy(sp.kron(I, T) + sp.kron(T, I))


def tridiag(N, lo=-1.0, d=2.0, up=-1.0):
    return CsrMatrix.from_scipy(sp.diags([lo, d, up], [-1, 0, 1], shape=(N, N)))


class Recorder:
    """Observer that stores a copy of every emitted value by name and k."""

    def __init__(self):
        self.data = defaultdict(dict)

    def __call__(self, name, k, value):
        self.data[name][k] = np.array(value, copy=True)

    def __getitem__(self, name):
        return self.data[name]


def rel_orth(a, b):
    """``|a^H b| / (||a|| ||b||)``."""
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def random_sparse(seed, N=50, density=0.08, complex_=False):
    """Random sparse matrix with a dominant diagonal (pattern includes the diagonal)."""
    rng = np.random.default_rng(seed)
    M = sp.random(N, N, density=density, random_state=rng, format="csr")
    M.data = rng.standard_normal(M.data.size)
    if complex_:
        M = M + 1j * sp.random(N, N, density=density, random_state=rng, format="csr")
    M = M + sp.diags(4.0 + rng.random(N))
    return CsrMatrix.from_scipy(M.tocsr())


def pattern_mismatch(A, P):
    """Max relative deviation of ``(L U)_ij`` from ``A_ij`` over the pattern of ``A``."""
    LU = P.product_dense()
    Ad = A.to_dense()
    mask = Ad != 0
    return np.max(np.abs(LU[mask] - Ad[mask])) / np.max(np.abs(Ad))


def few_eigenvalues(seed, N=10, distinct=(1.0, 2.0, 3.0, 4.0, 5.0)):
    """Non-normal ``V diag(lam) V^-1`` whose eigenvalues take only ``distinct`` values.

    A generic right-hand side then has minimal-polynomial degree
    ``len(distinct)`` with a wide singular-value gap.
    """
    rng = np.random.default_rng(seed)
    V = np.eye(N) + 0.3 * rng.standard_normal((N, N))
    lam = np.resize(np.asarray(distinct), N)
    return V @ np.diag(lam) @ np.linalg.inv(V), rng.standard_normal(N)


def identity_error(variant, A, b, Q, kmax=15, dps=40):
    """Max over ``k <= kmax`` of ``||r_k - phi(A) rhat_k|| / ||r_k||``.

    ``rhat_k`` comes from extended-precision ML(n)BiCG with the same shadow
    block. Variant A uses ``phi_{g(k)+1}``, variant B ``phi_{g(k+1)}``,
    with the factors taken from the solver's recorded rho sequence.
    """
    from mlbicgstab import SolverConfig, g_index, mlbicg_solve, mlbicgstab_solve
    from mlbicgstab.oracle import PhiPoly, apply_phi

    n = Q.shape[1]
    cfg = SolverConfig(n=n, tol=1e-14, max_it=kmax, variant=variant, shadow_mode="explicit", shadow=Q)
    rec = Recorder()
    out = mlbicgstab_solve(A, b, None, cfg, observer=rec)
    ref = Recorder()
    mlbicg_solve(A, b, Q=Q, tol=1e-30, max_it=kmax, observer=ref, dps=dps)
    worst = 0.0
    for k in range(1, out.iter + 1):
        if k not in rec["r"] or k not in ref["r"]:
            continue
        degree = g_index(n, k) + 1 if variant == "A" else g_index(n, k + 1)
        phi = PhiPoly(out.rho_history[:degree])
        r = rec["r"][k]
        worst = max(worst, np.linalg.norm(r - apply_phi(phi, A, ref["r"][k])) / np.linalg.norm(r))
    return worst, out
