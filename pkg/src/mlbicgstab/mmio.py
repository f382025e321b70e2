"""Matrix Market reading/writing and CSV output for convergence histories."""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, MatrixMarketError
from .kernel import CsrMatrix, csr_from_arrays, spmv
from .records import ConvergenceRecord

__all__ = [
    "MmHeader",
    "parse_matrix_market",
    "read_matrix_market",
    "format_matrix_market",
    "load_rhs_or_default",
    "write_history_csv",
    "read_history_csv",
    "HISTORY_COLUMNS",
]

HISTORY_COLUMNS = ("k", "relres", "true_relres", "matvecs", "precond_applies", "wall_ns")

_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "complex", "integer", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


@dataclass(frozen=True)
class MmHeader:
    object: str
    format: str
    field: str
    symmetry: str


def _parse_banner(line, lineno):
    parts = line.split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing or malformed %%MatrixMarket banner", lineno)
    obj, fmt, fld, sym = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", lineno)
    if fmt not in _FORMATS:
        raise MatrixMarketError(f"unknown format {fmt!r}", lineno)
    if fld not in _FIELDS:
        raise MatrixMarketError(f"unknown field {fld!r}", lineno)
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"unknown symmetry {sym!r}", lineno)
    if fld == "pattern" and fmt == "array":
        raise MatrixMarketError("pattern field is only valid for coordinate format", lineno)
    if sym == "hermitian" and fld != "complex":
        raise MatrixMarketError("hermitian symmetry requires complex field", lineno)
    return MmHeader(obj, fmt, fld, sym)


def _data_lines(lines, start):
    """Yield (lineno, tokens) for non-blank, non-comment lines."""
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        s = raw.strip()
        if not s or s.startswith("%"):
            continue
        yield lineno, s.split()


def _number(tok, lineno, kind):
    try:
        return int(tok) if kind == "int" else float(tok)
    except ValueError:
        raise MatrixMarketError(f"cannot parse {tok!r} as a number", lineno) from None


def _value(tokens, header, lineno):
    need = {"real": 1, "integer": 1, "complex": 2, "pattern": 0}[header.field]
    if len(tokens) != need:
        raise MatrixMarketError(f"expected {need} value token(s), got {len(tokens)}", lineno)
    if header.field == "pattern":
        return 1.0
    if header.field == "complex":
        return complex(_number(tokens[0], lineno, "float"), _number(tokens[1], lineno, "float"))
    if header.field == "integer":
        return float(_number(tokens[0], lineno, "int"))
    return _number(tokens[0], lineno, "float")


def parse_matrix_market(stream, *, header_only=False):
    """Parse Matrix Market text.

    Parameters
    ----------
    stream : text file object or str
        The Matrix Market content.

    Returns
    -------
    CsrMatrix or numpy.ndarray
        Coordinate files give a :class:`CsrMatrix` with symmetric,
        skew-symmetric and hermitian storage expanded to general form.
        Array files holding an ``N x 1`` object give a dense vector.
    """
    text = stream if isinstance(stream, str) else stream.read()
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty input", 1)
    header = _parse_banner(lines[0], 1)
    if header_only:
        return header
    body = _data_lines(lines, 1)
    try:
        lineno, size = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    if header.format == "coordinate":
        return _parse_coordinate(header, lineno, size, body, len(lines))
    return _parse_array(header, lineno, size, body, len(lines))


def _parse_coordinate(header, lineno, size, body, nlines):
    if len(size) != 3:
        raise MatrixMarketError("coordinate size line needs 'rows cols entries'", lineno)
    nrows, ncols, nnz = (_number(t, lineno, "int") for t in size)
    if min(nrows, ncols, nnz) < 0:
        raise MatrixMarketError("negative size", lineno)
    if header.symmetry != "general" and nrows != ncols:
        raise MatrixMarketError(f"{header.symmetry} matrix must be square", lineno)
    dtype = np.complex128 if header.field == "complex" else np.float64
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=dtype)
    count = 0
    for lineno, tokens in body:
        if count == nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        if len(tokens) < 2:
            raise MatrixMarketError("entry needs a row and a column index", lineno)
        i, j = _number(tokens[0], lineno, "int"), _number(tokens[1], lineno, "int")
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"index ({i}, {j}) outside {nrows}x{ncols}", lineno)
        if header.symmetry != "general" and j > i:
            raise MatrixMarketError(f"{header.symmetry} storage expects lower-triangle entries only", lineno)
        if header.symmetry == "skew-symmetric" and i == j:
            raise MatrixMarketError("skew-symmetric matrix cannot store diagonal entries", lineno)
        rows[count], cols[count] = i - 1, j - 1
        vals[count] = _value(tokens[2:], header, lineno)
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {count}", nlines)
    if header.symmetry != "general":
        off = rows != cols
        mirror = vals[off]
        if header.symmetry == "skew-symmetric":
            mirror = -mirror
        elif header.symmetry == "hermitian":
            mirror = np.conj(mirror)
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, mirror]))
    return csr_from_arrays(nrows, ncols, rows, cols, vals)


def _parse_array(header, lineno, size, body, nlines):
    if len(size) != 2:
        raise MatrixMarketError("array size line needs 'rows cols'", lineno)
    nrows, ncols = (_number(t, lineno, "int") for t in size)
    if ncols != 1 or header.symmetry != "general":
        raise MatrixMarketError("only general N x 1 array objects (vectors) are supported", lineno)
    dtype = np.complex128 if header.field == "complex" else np.float64
    out = np.empty(nrows, dtype=dtype)
    count = 0
    for lineno, tokens in body:
        if count == nrows:
            raise MatrixMarketError(f"more than the declared {nrows} entries", lineno)
        out[count] = _value(tokens, header, lineno)
        count += 1
    if count != nrows:
        raise MatrixMarketError(f"declared {nrows} entries, found {count}", nlines)
    return out


def read_matrix_market(path):
    """Parse the Matrix Market file at ``path``."""
    with open(path, encoding="ascii", errors="replace") as fh:
        return parse_matrix_market(fh)


def _fmt_real(x):
    return repr(float(x))


def format_matrix_market(obj, field=None, symmetry="general"):
    """Serialise a :class:`CsrMatrix` (coordinate) or 1-D array (array format).

    For non-general ``symmetry`` only the lower triangle is written; the
    caller is responsible for the matrix actually having that symmetry.
    """
    out = io.StringIO()
    if isinstance(obj, CsrMatrix):
        if field is None:
            field = "complex" if obj.is_complex else "real"
        out.write(f"%%MatrixMarket matrix coordinate {field} {symmetry}\n")
        entries = []
        for i in range(obj.nrows):
            cols, vals = obj.row(i)
            for j, v in zip(cols, vals):
                if symmetry != "general" and (j > i or (symmetry == "skew-symmetric" and j == i)):
                    continue
                entries.append((i, int(j), v))
        out.write(f"{obj.nrows} {obj.ncols} {len(entries)}\n")
        for i, j, v in entries:
            out.write(f"{i + 1} {j + 1}{_fmt_value(v, field)}\n")
        return out.getvalue()
    vec = np.asarray(obj).reshape(-1)
    if field is None:
        field = "complex" if np.iscomplexobj(vec) else "real"
    out.write(f"%%MatrixMarket matrix array {field} general\n{vec.size} 1\n")
    for v in vec:
        out.write(_fmt_value(v, field).lstrip() + "\n")
    return out.getvalue()


def _fmt_value(v, field):
    if field == "pattern":
        return ""
    if field == "complex":
        v = complex(v)
        return f" {_fmt_real(v.real)} {_fmt_real(v.imag)}"
    if field == "integer":
        return f" {int(round(v.real if isinstance(v, complex) else v))}"
    return f" {_fmt_real(v)}"


def load_rhs_or_default(A: CsrMatrix, rhs_path=None):
    """Right-hand side from ``rhs_path``, or ``A @ ones`` when no file is given."""
    if rhs_path is None:
        return spmv(A, np.ones(A.ncols, dtype=A.dtype))
    b = read_matrix_market(rhs_path)
    if isinstance(b, CsrMatrix):
        if b.ncols != 1:
            raise InvalidArgumentError(f"right-hand side must be N x 1, got {b.nrows}x{b.ncols}")
        b = b.to_dense()[:, 0]
    if b.shape[0] != A.nrows:
        raise InvalidArgumentError(f"right-hand side has length {b.shape[0]}, matrix has {A.nrows} rows")
    return b


def _fmt_csv_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"


def write_history_csv(records, path):
    """Write a convergence history as CSV (17 significant digits per float)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for r in records:
            w.writerow([r.k, _fmt_csv_float(r.relres), _fmt_csv_float(r.true_relres),
                        r.matvecs, r.precond_applies, r.wall_ns])


def read_history_csv(path):
    """Inverse of :func:`write_history_csv`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HISTORY_COLUMNS:
            raise InvalidArgumentError(f"unexpected history header {reader.fieldnames}")
        return [ConvergenceRecord(k=int(row["k"]), relres=float(row["relres"]),
                                  true_relres=float(row["true_relres"]), matvecs=int(row["matvecs"]),
                                  precond_applies=int(row["precond_applies"]), wall_ns=int(row["wall_ns"]))
                for row in reader]
