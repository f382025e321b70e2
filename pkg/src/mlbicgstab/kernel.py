"""Dense-vector and CSR sparse-matrix kernels over real or complex scalars.

Vectors are plain one-dimensional numpy arrays (float64 or complex128).
The CSR matvec is delegated to ``scipy.sparse``, whose CSR kernel walks
rows in order and columns in storage order; since :class:`CsrMatrix` keeps
columns sorted, the accumulation order is row-major, column-ascending.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError

__all__ = [
    "CsrMatrix",
    "spmv",
    "spmv_adjoint",
    "dot",
    "axpy",
    "norm2",
    "csr_from_triplets",
    "as_vector",
]


def _scalar_dtype(*dtypes):
    dt = np.result_type(*dtypes)
    return np.dtype(np.complex128) if np.issubdtype(dt, np.complexfloating) else np.dtype(np.float64)


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed sparse row matrix.

    Columns are sorted ascending within every row and no (row, col) pair
    appears twice; the constructor checks this and raises
    :class:`InvalidArgumentError` otherwise. Instances are immutable.
    """

    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _sp: sp.csr_matrix = field(init=False, repr=False)
    _sp_h: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=_scalar_dtype(np.asarray(self.values).dtype))
        nrows, ncols = int(self.nrows), int(self.ncols)
        if nrows < 0 or ncols < 0:
            raise InvalidArgumentError("negative matrix dimension")
        if row_ptr.shape != (nrows + 1,) or row_ptr[0] != 0:
            raise InvalidArgumentError("row_ptr must have length nrows+1 and start at 0")
        if np.any(np.diff(row_ptr) < 0):
            raise InvalidArgumentError("row_ptr must be nondecreasing")
        nnz = int(row_ptr[-1])
        if col_idx.shape != (nnz,) or values.shape != (nnz,):
            raise InvalidArgumentError("col_idx and values must have length row_ptr[-1]")
        if nnz and (col_idx.min() < 0 or col_idx.max() >= ncols):
            raise InvalidArgumentError("column index out of range")
        # strictly increasing columns inside each row
        if nnz > 1:
            step = np.diff(col_idx)
            same_row = np.ones(nnz - 1, dtype=bool)
            starts = row_ptr[1:-1]
            starts = starts[(starts > 0) & (starts < nnz)]
            same_row[starts - 1] = False
            if np.any(step[same_row] <= 0):
                raise InvalidArgumentError("columns must be sorted and unique within each row")
        for name, val in (("nrows", nrows), ("ncols", ncols), ("row_ptr", row_ptr),
                          ("col_idx", col_idx), ("values", values)):
            object.__setattr__(self, name, val)
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False
        mat = sp.csr_matrix((values, col_idx, row_ptr), shape=(nrows, ncols))
        mat.has_sorted_indices = True
        object.__setattr__(self, "_sp", mat)
        object.__setattr__(self, "_sp_h", mat.conj().T.tocsr() if self.is_complex else mat.T.tocsr())

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self):
        return int(self.row_ptr[-1])

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def is_complex(self):
        return np.issubdtype(self.values.dtype, np.complexfloating)

    def row(self, i):
        """Column indices and values of row ``i`` (read-only views)."""
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_idx[lo:hi], self.values[lo:hi]

    def to_dense(self):
        return self._sp.toarray()

    def to_scipy(self):
        """A scipy CSR copy of this matrix."""
        return self._sp.copy()

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a)
        if a.ndim != 2:
            raise InvalidArgumentError("from_dense expects a 2-D array")
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def from_scipy(cls, m):
        m = sp.csr_matrix(m, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    def __matmul__(self, v):
        return spmv(self, v)


def as_vector(v, dtype=None):
    """Coerce ``v`` to a 1-D float64/complex128 array."""
    v = np.asarray(v)
    if v.ndim != 1:
        v = v.reshape(-1)
    if dtype is None:
        dtype = _scalar_dtype(v.dtype)
    return v.astype(dtype, copy=False)


def _matvec(A, v):
    """Apply a CsrMatrix, a dense array or a scipy matrix to ``v``."""
    if isinstance(A, CsrMatrix):
        return spmv(A, v)
    return A @ v


def spmv(A: CsrMatrix, v) -> np.ndarray:
    """Return ``A @ v``."""
    v = as_vector(v)
    if A.ncols != v.shape[0]:
        raise InvalidArgumentError(f"spmv: A has {A.ncols} columns, vector has length {v.shape[0]}")
    return A._sp @ v


def spmv_adjoint(A: CsrMatrix, v) -> np.ndarray:
    """Return ``A^H @ v`` (conjugate transpose; plain transpose for real A)."""
    v = as_vector(v)
    if A.nrows != v.shape[0]:
        raise InvalidArgumentError(f"spmv_adjoint: A has {A.nrows} rows, vector has length {v.shape[0]}")
    return A._sp_h @ v


def dot(u, v):
    """``sum(conj(u_i) * v_i)``, conjugate-linear in the first argument."""
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise InvalidArgumentError(f"dot: length mismatch {u.shape} vs {v.shape}")
    if u.dtype == object:  # extended-precision scalars (mpmath)
        return np.dot(np.conjugate(u), v)
    if np.iscomplexobj(u):
        return np.vdot(u, v)
    return np.dot(u, v)


def axpy(alpha, x, y):
    """Return ``alpha * x + y`` as a new array."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise InvalidArgumentError(f"axpy: length mismatch {x.shape} vs {y.shape}")
    return alpha * x + y


def norm2(v) -> float:
    """Euclidean norm."""
    v = np.asarray(v)
    if v.dtype == object:
        return float(sum(abs(t) ** 2 for t in v) ** 0.5)
    return float(np.linalg.norm(v))


def csr_from_triplets(nrows, ncols, entries):
    """Build a :class:`CsrMatrix` from ``(row, col, value)`` triplets.

    Duplicate positions are summed. Indices are 0-based.
    """
    entries = list(entries)
    if entries:
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    return csr_from_arrays(nrows, ncols, rows, cols, vals)


def csr_from_arrays(nrows, ncols, rows, cols, vals):
    """Vectorised :func:`csr_from_triplets` taking parallel index/value arrays."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals)
    if vals.dtype.kind not in "fc":
        vals = vals.astype(np.float64)
    if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
        raise InvalidArgumentError("triplet index out of range")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.ones(rows.size, dtype=bool)
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(new) - 1
        summed = np.zeros(int(new.sum()), dtype=_scalar_dtype(vals.dtype))
        np.add.at(summed, group, vals)
        rows, cols, vals = rows[new], cols[new], summed
    row_ptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(row_ptr, rows + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    return CsrMatrix(nrows, ncols, row_ptr, cols, vals.astype(_scalar_dtype(vals.dtype)))
