"""Preconditioners applied as ``M^{-1} v``: identity and ILU(0)."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .errors import InvalidArgumentError
from .kernel import CsrMatrix, as_vector

__all__ = ["IdentityPreconditioner", "Ilu0Preconditioner", "ilu0_factor", "precond_apply", "make_preconditioner"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentityPreconditioner:
    n: int
    kind: str = "identity"

    def apply(self, v):
        v = as_vector(v)
        if v.shape[0] != self.n:
            raise InvalidArgumentError(f"preconditioner of size {self.n} applied to vector of length {v.shape[0]}")
        return v.copy()


@dataclass(frozen=True, eq=False)
class Ilu0Preconditioner:
    """Incomplete LU factors with zero fill-in.

    ``L`` is strictly lower triangular (its unit diagonal is implicit),
    ``U`` is upper triangular with its diagonal stored.
    ``zero_pivots`` lists the rows whose exactly-zero pivot was replaced by 1.
    """

    L: CsrMatrix
    U: CsrMatrix
    zero_pivots: tuple = ()
    kind: str = "ilu0"

    @property
    def n(self):
        return self.L.nrows

    @property
    def replaced_pivots(self):
        return len(self.zero_pivots)

    def apply(self, v):
        v = as_vector(v)
        if v.shape[0] != self.n:
            raise InvalidArgumentError(f"preconditioner of size {self.n} applied to vector of length {v.shape[0]}")
        if self.L.is_complex or self.U.is_complex:
            v = v.astype(np.complex128, copy=False)
        y = spsolve_triangular(self._l, v, lower=True, unit_diagonal=True)
        return spsolve_triangular(self._u, y, lower=False)

    @property
    def _l(self):
        # spsolve_triangular wants the unit diagonal present in the pattern
        cached = self.__dict__.get("_l_cache")
        if cached is None:
            cached = (self.L.to_scipy() + sp.eye(self.n, format="csr", dtype=self.L.dtype)).tocsr()
            cached.sort_indices()
            self.__dict__["_l_cache"] = cached
        return cached

    @property
    def _u(self):
        cached = self.__dict__.get("_u_cache")
        if cached is None:
            cached = self.U.to_scipy()
            self.__dict__["_u_cache"] = cached
        return cached

    def product_dense(self):
        """Dense ``L @ U`` with the unit diagonal of ``L`` included."""
        return (self.L.to_dense() + np.eye(self.n)) @ self.U.to_dense()


def ilu0_factor(A: CsrMatrix) -> Ilu0Preconditioner:
    """ILU(0) of ``A``: Gaussian elimination restricted to the pattern of ``A``.

    Diagonal positions absent from the pattern are inserted as explicit
    zeros. A pivot that comes out exactly zero is replaced by 1 as soon as
    its row is finished, before later rows divide by it.
    """
    if A.nrows != A.ncols:
        raise InvalidArgumentError(f"ILU(0) needs a square matrix, got {A.nrows}x{A.ncols}")
    n = A.nrows
    dtype = A.dtype
    # pattern(A) union diagonal, rows sorted
    rows, vals = [], []
    for i in range(n):
        cols, v = A.row(i)
        if not np.any(cols == i):
            pos = np.searchsorted(cols, i)
            cols = np.insert(cols, pos, i)
            v = np.insert(v, pos, 0)
        rows.append(np.array(cols))
        vals.append(np.array(v, dtype=dtype))
    diag_pos = [int(np.searchsorted(c, i)) for i, c in enumerate(rows)]

    where = np.full(n, -1, dtype=np.int64)
    zero_pivots = []
    for i in range(n):
        cols, v = rows[i], vals[i]
        where[cols] = np.arange(cols.size)
        for p in range(diag_pos[i]):
            k = cols[p]
            v[p] = v[p] / vals[k][diag_pos[k]]
            kcols = rows[k][diag_pos[k] + 1:]
            hit = where[kcols]
            mask = hit >= 0
            if mask.any():
                v[hit[mask]] -= v[p] * vals[k][diag_pos[k] + 1:][mask]
        where[cols] = -1
        pivot = v[diag_pos[i]]
        if pivot == 0:
            v[diag_pos[i]] = 1
            zero_pivots.append(i)
        else:
            scale = np.abs(v).max()
            if abs(pivot) < 1e-14 * scale:
                log.warning("ILU(0): near-zero pivot %.3e in row %d", abs(pivot), i)
    if zero_pivots:
        log.info("ILU(0): replaced %d zero pivot(s) by 1", len(zero_pivots))

    l_ptr, u_ptr = [0], [0]
    l_cols, l_vals, u_cols, u_vals = [], [], [], []
    for i in range(n):
        d = diag_pos[i]
        l_cols.append(rows[i][:d]), l_vals.append(vals[i][:d])
        u_cols.append(rows[i][d:]), u_vals.append(vals[i][d:])
        l_ptr.append(l_ptr[-1] + d)
        u_ptr.append(u_ptr[-1] + rows[i].size - d)

    def _cat(parts, dt):
        return np.concatenate(parts).astype(dt) if parts else np.zeros(0, dtype=dt)

    L = CsrMatrix(n, n, np.array(l_ptr), _cat(l_cols, np.int64), _cat(l_vals, dtype))
    U = CsrMatrix(n, n, np.array(u_ptr), _cat(u_cols, np.int64), _cat(u_vals, dtype))
    return Ilu0Preconditioner(L, U, tuple(zero_pivots))


def precond_apply(P, v):
    """Return ``M^{-1} v`` for the preconditioner handle ``P``."""
    return P.apply(v)


def make_preconditioner(kind, A):
    """Build the preconditioner named ``kind`` ('none'/'identity' or 'ilu0')."""
    if kind in (None, "none", "identity"):
        return IdentityPreconditioner(A.nrows)
    if kind == "ilu0":
        return ilu0_factor(A)
    raise InvalidArgumentError(f"unknown preconditioner {kind!r}")
