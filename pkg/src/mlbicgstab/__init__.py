"""ML(n)BiCGStab sparse solvers with ILU(0) preconditioning and dense test oracles."""

from .config import ShadowBlock, SolverConfig, build_shadow_block
from .errors import (Breakdown, ConfigurationError, InsufficientDataError, InvalidArgumentError,
                     MatrixMarketError, SingularMatrixError)
from .harness import count_report, run_single, sweep_n, true_relative_error
from .index_maps import g_index, r_index
from .kernel import CsrMatrix, axpy, csr_from_triplets, dot, norm2, spmv, spmv_adjoint
from .mmio import load_rhs_or_default, parse_matrix_market, read_matrix_market, write_history_csv
from .precond import IdentityPreconditioner, Ilu0Preconditioner, ilu0_factor, precond_apply
from .records import ConvergenceRecord, OpCounters, SolverOutcome
from .reference import bicgstab_solve, mlbicg_solve, next_shadow_p
from .stab import choose_rho, mlbicgstab_a_solve, mlbicgstab_b_solve, mlbicgstab_solve, residual_check

__version__ = "0.1.0"
