import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlbicgstab import CsrMatrix, InvalidArgumentError, MatrixMarketError, load_rhs_or_default, parse_matrix_market
from mlbicgstab.mmio import format_matrix_market, read_history_csv, write_history_csv
from mlbicgstab.records import ConvergenceRecord


def test_general_identity():
    A = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 1\n")
    assert np.array_equal(A.to_dense(), np.eye(2))


def test_symmetric_expansion():
    A = parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n% comment\n\n2 2 3\n1 1 2\n2 1 3\n2 2 2\n")
    assert np.array_equal(A.to_dense(), [[2, 3], [3, 2]])
    assert A.nnz == 4


def test_hermitian_mirror_is_conjugated():
    A = parse_matrix_market("%%MatrixMarket matrix coordinate complex hermitian\n2 2 3\n1 1 1 0\n2 1 1 2\n2 2 4 0\n")
    assert A.to_dense()[0, 1] == 1 - 2j
    assert A.to_dense()[1, 0] == 1 + 2j


def test_skew_and_pattern_and_integer():
    A = parse_matrix_market("%%matrixmarket MATRIX Coordinate Real Skew-Symmetric\n2 2 1\n2 1 5\n")
    assert np.array_equal(A.to_dense(), [[0, -5], [5, 0]])
    P = parse_matrix_market("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n")
    assert np.array_equal(P.to_dense(), [[0, 0, 1], [1, 0, 0]])
    Z = parse_matrix_market("%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 -4\n")
    assert Z.to_dense()[0, 0] == -4.0


def test_array_vector():
    b = parse_matrix_market("%%MatrixMarket matrix array real general\n3 1\n1.5\n-2\n3e-3\n")
    assert np.array_equal(b, [1.5, -2, 3e-3])
    c = parse_matrix_market("%%MatrixMarket matrix array complex general\n1 1\n1 -1\n")
    assert c[0] == 1 - 1j


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix coordinate real\n1 1 1\n1 1 1\n", 1),
    ("%%NotMarket matrix coordinate real general\n1 1 1\n1 1 1\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n", 4),
    ("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n1 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n", 3),
    ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n", 2),
    ("%%MatrixMarket matrix coordinate real general\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(MatrixMarketError) as info:
        parse_matrix_market(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def _random_matrix(rng, field, symmetry, N=5):
    a = rng.integers(-9, 10, (N, N)).astype(float)
    if field == "complex":
        a = a + 1j * rng.integers(-9, 10, (N, N))
    elif field == "real":
        a = a / 4
    elif field == "pattern":
        a = (a != 0).astype(float)
    a[rng.random((N, N)) < 0.4] = 0
    if symmetry == "symmetric":
        a = np.tril(a) + np.tril(a, -1).T
    elif symmetry == "skew-symmetric":
        a = np.tril(a, -1) - np.tril(a, -1).T
    elif symmetry == "hermitian":
        a = np.tril(a, -1) + np.tril(a, -1).conj().T + np.diag(np.diag(a).real)
    return a


COMBOS = [(f, s) for f in ("real", "integer", "complex", "pattern")
          for s in ("general", "symmetric", "skew-symmetric", "hermitian")
          if not (s == "hermitian" and f != "complex") and not (s == "skew-symmetric" and f == "pattern")]


@pytest.mark.parametrize("field,symmetry", COMBOS)
def test_round_trip_all_combinations(field, symmetry):
    rng = np.random.default_rng(hash((field, symmetry)) % 2 ** 32)
    a = _random_matrix(rng, field, symmetry)
    A = CsrMatrix.from_dense(a)
    text = format_matrix_market(A, field=field, symmetry=symmetry)
    B = parse_matrix_market(io.StringIO(text))
    assert np.array_equal(B.to_dense(), a)
    stored = int(text.splitlines()[1].split()[2])
    if symmetry != "general":
        diag = sum(1 for i in range(A.nrows) if a[i, i] != 0)
        assert B.nnz == stored + (stored - diag)


@settings(max_examples=25)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
def test_vector_round_trip(values):
    v = np.array(values)
    assert np.array_equal(parse_matrix_market(format_matrix_market(v)), v)


def test_load_rhs_default_and_file(tmp_path):
    I3 = CsrMatrix.from_dense(np.eye(3))
    assert np.array_equal(load_rhs_or_default(I3), [1, 1, 1])
    assert np.array_equal(load_rhs_or_default(CsrMatrix.from_dense(np.diag([1.0, 2.0]))), [1, 2])
    path = tmp_path / "b.mtx"
    path.write_text(format_matrix_market(np.array([0.25, -1.0, 7.0])))
    assert np.array_equal(load_rhs_or_default(I3, path), [0.25, -1, 7])
    path.write_text(format_matrix_market(np.array([1.0, 2.0])))
    with pytest.raises(InvalidArgumentError):
        load_rhs_or_default(I3, path)


def test_history_csv(tmp_path):
    path = tmp_path / "h.csv"
    write_history_csv([], path)
    assert path.read_text().splitlines() == ["k,relres,true_relres,matvecs,precond_applies,wall_ns"]
    recs = [ConvergenceRecord(1, 0.5, float("nan"), 2, 2, 10),
            ConvergenceRecord(2, 1 / 3, 0.1234567890123456789, 4, 4, 99)]
    write_history_csv(recs[:1], path)
    assert len(path.read_text().splitlines()) == 2
    write_history_csv(recs, path)
    back = read_history_csv(path)
    assert [r.relres for r in back] == [0.5, 1 / 3]
    assert np.isnan(back[0].true_relres) and back[1].true_relres == recs[1].true_relres
    assert [(r.k, r.matvecs, r.precond_applies, r.wall_ns) for r in back] == [(1, 2, 2, 10), (2, 4, 4, 99)]


def test_history_csv_io_error(tmp_path):
    with pytest.raises(OSError):
        write_history_csv([], tmp_path / "missing" / "h.csv")
