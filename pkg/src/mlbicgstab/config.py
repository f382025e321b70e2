"""Run configuration and shadow-block construction."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError
from .kernel import as_vector

__all__ = ["SolverConfig", "ShadowBlock", "build_shadow_block", "SHADOW_MODES"]

SHADOW_MODES = ("randn_r0", "sign_r0", "complex_randn_r0", "complex_sign_r0", "adaptive_fom", "explicit")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one ML(n)BiCGStab run.

    ``max_it=None`` means ``3 * N`` where ``N`` is the system size.
    ``kappa = 0`` selects the plain minimising rho; ``0 < kappa < 1`` turns
    on the rescaling safeguard.
    """

    n: int = 1
    tol: float = 1e-7
    max_it: int | None = None
    kappa: float = 0.0
    shadow_mode: str = "randn_r0"
    seed: int = 0
    variant: str = "A"
    shadow: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol!r}")
        if self.max_it is not None and self.max_it < 1:
            raise ConfigurationError(f"max_it must be positive, got {self.max_it!r}")
        if not 0 <= self.kappa < 1:
            raise ConfigurationError(f"kappa must lie in [0, 1), got {self.kappa!r}")
        if self.shadow_mode not in SHADOW_MODES:
            raise ConfigurationError(f"unknown shadow mode {self.shadow_mode!r}")
        if self.shadow_mode == "explicit" and self.shadow is None:
            raise ConfigurationError("explicit shadow mode needs a shadow block")
        variant = str(self.variant).upper()
        if variant not in ("A", "B"):
            raise ConfigurationError(f"variant must be 'A' or 'B', got {self.variant!r}")
        object.__setattr__(self, "variant", variant)

    @property
    def rho_mode(self):
        return "standard" if self.kappa == 0 else f"svds({self.kappa:g})"

    def resolved_max_it(self, N):
        return 3 * N if self.max_it is None else int(self.max_it)


@dataclass
class ShadowBlock:
    """The shadow vectors ``q_1..q_n`` stored as the columns of ``Q``.

    In ``adaptive_fom`` mode only column 1 is set up front; the solver
    fills column ``k+1`` during step ``k``.
    """

    Q: np.ndarray
    mode: str
    seed: int | None = None

    @property
    def n(self):
        return self.Q.shape[1]

    @property
    def adaptive(self):
        return self.mode == "adaptive_fom"

    def column(self, i):
        """``q_i`` with 1-based ``i``."""
        return self.Q[:, i - 1]


def build_shadow_block(mode, n, r0, seed=0, Q=None):
    """Build the shadow block for ``mode``.

    Column 1 equals ``r0`` in every mode except ``explicit``, where ``Q``
    (an ``N x n`` array) is used verbatim.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    r0 = as_vector(r0)
    N = r0.shape[0]
    if mode == "explicit":
        if Q is None:
            raise InvalidArgumentError("explicit mode needs Q")
        Q = np.array(Q, copy=True)
        if Q.ndim == 1:
            Q = Q[:, None]
        if Q.shape != (N, n):
            raise InvalidArgumentError(f"Q has shape {Q.shape}, expected {(N, n)}")
        if Q.dtype.kind not in "fc":
            Q = Q.astype(np.float64)
        return ShadowBlock(Q, mode, None)
    if mode not in SHADOW_MODES:
        raise InvalidArgumentError(f"unknown shadow mode {mode!r}")
    rng = np.random.default_rng(seed)
    shape = (N, n - 1)
    if mode == "randn_r0":
        rest = rng.standard_normal(shape)
    elif mode == "sign_r0":
        rest = np.sign(rng.standard_normal(shape))
    elif mode == "complex_randn_r0":
        rest = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    elif mode == "complex_sign_r0":
        rest = np.sign(rng.standard_normal(shape)) + 1j * np.sign(rng.standard_normal(shape))
    else:  # adaptive_fom: columns 2..n are written by the solver
        rest = np.zeros(shape)
    dtype = np.result_type(r0.dtype, rest.dtype)
    out = np.empty((N, n), dtype=dtype)
    out[:, 0] = r0
    out[:, 1:] = rest
    return ShadowBlock(out, mode, seed)


def resolve_shadow(cfg: SolverConfig, r0, N):
    """Shadow block for a solve configured by ``cfg`` with initial residual ``r0``."""
    block = build_shadow_block(cfg.shadow_mode, cfg.n, r0, cfg.seed, Q=cfg.shadow)
    if block.adaptive and cfg.resolved_max_it(N) > cfg.n:
        raise ConfigurationError(
            f"adaptive_fom shadows need max_it <= n (got max_it={cfg.resolved_max_it(N)}, n={cfg.n})")
    if block.Q.shape[0] != N:
        raise ConfigurationError(f"shadow block has {block.Q.shape[0]} rows, system has {N}")
    return block
