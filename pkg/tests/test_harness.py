import csv
import io

import numpy as np
import pytest

from mlbicgstab import CsrMatrix, InsufficientDataError, SolverConfig, mlbicgstab_solve, true_relative_error
from mlbicgstab.cli import main
from mlbicgstab.harness import count_report, format_summary, run_single, sweep_n, table_costs
from mlbicgstab.mmio import format_matrix_market, read_history_csv

from helpers import poisson2d, shifted_gaussian, tridiag


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "eye.mtx"
    path.write_text(format_matrix_market(CsrMatrix.from_dense(np.eye(3))))
    return path


@pytest.fixture
def poisson_file(tmp_path):
    path = tmp_path / "poisson.mtx"
    path.write_text(format_matrix_market(poisson2d(8), symmetry="symmetric"))
    return path


def test_true_relative_error_examples():
    A, b = shifted_gaussian(0, 5)
    assert true_relative_error(A, np.linalg.solve(A, b), b) <= 1e-15
    assert true_relative_error(A, np.zeros(5), b) == 1.0
    assert true_relative_error(np.eye(5), b / 2, b) == pytest.approx(0.5)
    x = np.ones(5)
    assert true_relative_error(A, x, b) == np.linalg.norm(b - A @ x) / np.linalg.norm(b)


def test_run_single_identity(identity_file, tmp_path):
    hist = tmp_path / "h.csv"
    res = run_single(SolverConfig(n=2), identity_file, history=hist)
    assert res.outcome.flag == 0 and res.outcome.iter == 1 and res.true_relres < 1e-14
    rows = read_history_csv(hist)
    assert rows[-1].relres == res.outcome.err
    assert format_summary(res.outcome, res.true_relres).split()[:2] == ["0", "1"]


def test_run_single_missing_file(tmp_path):
    with pytest.raises(OSError):
        run_single(SolverConfig(), tmp_path / "nope.mtx")


def test_run_single_baseline(poisson_file):
    res = run_single(SolverConfig(n=3, variant="B"), poisson_file, baseline=True)
    assert res.outcome.flag == 0 and res.baseline.flag == 0
    assert res.baseline_true_relres < 1e-6


@pytest.mark.parametrize("variant", ["A", "B"])
def test_final_history_row_equals_err(variant):
    A = poisson2d(10)
    out = mlbicgstab_solve(A, np.ones(100), cfg=SolverConfig(n=3, variant=variant))
    assert out.history[-1].relres == out.err
    assert out.history[-1].k == out.iter


def test_sweep_identity():
    rep = sweep_n([1, 2], SolverConfig(), CsrMatrix.from_dense(np.eye(4)), precond="none")
    assert [r.iters for r in rep.rows] == [1, 1]


def test_sweep_poisson_csv():
    rep = sweep_n(range(1, 5), SolverConfig(), poisson2d(8))
    assert [r.n for r in rep.rows] == [1, 2, 3, 4]
    assert all(r.flag == 0 for r in rep.rows)
    buf = io.StringIO()
    rep.write_csv(buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["n", "iters", "seconds", "true_relres", "matvecs", "flag"] and len(rows) == 5


def test_sweep_records_failures():
    rep = sweep_n([1, 2], SolverConfig(), CsrMatrix.from_dense(np.eye(3)), rhs=np.ones(2), precond="none")
    assert all(r.flag == -1 and r.error for r in rep.rows)


def _long_run(variant, n):
    A = poisson2d(20)
    cfg = SolverConfig(n=n, variant=variant, tol=1e-12)
    return count_report(mlbicgstab_solve(A, np.ones(400), cfg=cfg), cfg)


def test_count_examples():
    rep = _long_run("A", 4)
    assert rep.cycles >= 3 and rep.averages["matvec"] == 1.25 and rep.ok
    rep = _long_run("B", 2)
    assert rep.averages["precond"] == 1.5 and rep.ok
    for v in "AB":
        assert _long_run(v, 1).averages["matvec"] == 2


def test_table_costs_values():
    assert table_costs("A", 4)["matvec"] == 1.25
    assert table_costs("A", 2)["dot"] == 4
    assert table_costs("B", 2)["axpy"] == 8


def test_count_insufficient_data():
    cfg = SolverConfig(n=4)
    out = mlbicgstab_solve(2 * np.eye(3), np.ones(3), cfg=cfg)
    with pytest.raises(InsufficientDataError):
        count_report(out, cfg)


# --- CLI ---------------------------------------------------------------------------

def test_cli_single(identity_file, capsys):
    assert main(["--matrix", str(identity_file), "--n", "2"]) == 0
    fields = capsys.readouterr().out.split()
    assert fields[:2] == ["0", "1"] and len(fields) == 6


def test_cli_options(poisson_file, tmp_path, capsys):
    hist = tmp_path / "h.csv"
    code = main(["--matrix", str(poisson_file), "--variant", "b", "--n", "2", "--shadow", "sign", "--kappa", "0.7",
                 "--precond", "none", "--history", str(hist), "--baseline", "bicgstab", "--counts", "--tol", "1e-10"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert "# baseline bicgstab" in out
    assert any(line.startswith("# matvec avg=1.5000") for line in out)
    assert hist.exists()


def test_cli_sweep(poisson_file, capsys):
    assert main(["--matrix", str(poisson_file), "--sweep", "1..3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,iters,seconds,true_relres,matvecs,flag" and len(lines) == 4


def test_cli_exit_codes(tmp_path, poisson_file, capsys):
    assert main(["--matrix", str(tmp_path / "missing.mtx")]) == 3
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n9 9 1\n")
    assert main(["--matrix", str(bad)]) == 3
    assert "line 3" in capsys.readouterr().err
    assert main(["--matrix", str(poisson_file), "--max-it", "2", "--tol", "1e-14", "--precond", "none"]) == 1
    rot = tmp_path / "rot.mtx"
    rot.write_text(format_matrix_market(CsrMatrix.from_dense(np.array([[0.0, -1.0], [1.0, 0.0]]))))
    rhs = tmp_path / "b.mtx"
    rhs.write_text(format_matrix_market(np.array([1.0, 0.0])))
    assert main(["--matrix", str(rot), "--rhs", str(rhs), "--n", "1", "--precond", "none"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["--matrix", str(poisson_file), "--variant", "c"])
    assert info.value.code == 3
    assert main(["--matrix", str(poisson_file), "--shadow", "fom", "--n", "2"]) == 3


def test_cli_complex_autodetect(tmp_path, capsys):
    A = tridiag(6).to_dense() * (1 + 0.5j)
    path = tmp_path / "c.mtx"
    path.write_text(format_matrix_market(CsrMatrix.from_dense(A)))
    assert main(["--matrix", str(path), "--n", "2"]) == 0
