"""Block sparse Bayesian learning with a known uniform block partition.

Each length-``d`` block ``h_i`` of the channel gets the prior
``CN(0, gamma_i * B)`` with one correlation matrix ``B`` shared by all blocks,
and the noise is ``CN(0, lam * I)``. EM alternates the Gaussian posterior
with closed-form updates of ``B``, ``gamma`` and ``lam``. Blocks whose
``gamma`` collapses are pruned and pinned to zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from ._em import hermitian, run_em
from .errors import (
    AllBlocksPrunedError,
    DegenerateMatrixError,
    DimensionMismatchError,
    InvalidConfigError,
    SingularSystemError,
)

TOEPLITZ_BOUND = 0.9


@dataclass(frozen=True)
class BlockPartition:
    num_blocks_c: int
    block_len_d: int

    @property
    def total_len(self) -> int:
        return self.num_blocks_c * self.block_len_d

    @classmethod
    def uniform(cls, L: int, d: int) -> "BlockPartition":
        if d < 1 or L % d:
            raise InvalidConfigError(f"block length {d} does not divide L={L}")
        return cls(L // d, d)

    def slices(self):
        d = self.block_len_d
        return [slice(i * d, (i + 1) * d) for i in range(self.num_blocks_c)]

    def tap_mask(self, block_mask) -> np.ndarray:
        return np.repeat(np.asarray(block_mask, dtype=bool), self.block_len_d)


@dataclass(frozen=True)
class SolverOptions:
    """EM controls shared by both BSBL estimators.

    ``toeplitz_final_only`` applies the Toeplitz projection once, after the
    loop, instead of at every iteration. With ``learn_lambda=False`` the noise
    level stays at ``lambda_init``.
    """

    max_iters: int = 500
    tol: float = 1e-6
    gamma_prune_threshold: float = 3e-2
    use_toeplitz: bool = True
    toeplitz_final_only: bool = False
    lambda_init: float = 1e-2
    gamma_init: float = 1.0
    learn_lambda: bool = True
    lambda_min: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidConfigError("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidConfigError("tol must be positive")
        if self.gamma_prune_threshold < 0:
            raise InvalidConfigError("gamma_prune_threshold must be nonnegative")
        if not (self.lambda_init > 0 and self.gamma_init > 0 and self.lambda_min > 0):
            raise InvalidConfigError("lambda_init, gamma_init and lambda_min must be positive")

    def with_(self, **kw) -> "SolverOptions":
        return replace(self, **kw)


@dataclass
class BsblState:
    gamma: np.ndarray
    corr_B: np.ndarray
    lam: float
    post_mean: np.ndarray
    post_cov: np.ndarray
    prior_D: np.ndarray
    iter: int = 0


@dataclass
class EstimationResult:
    h_hat: np.ndarray
    iterations: int
    wall_time_s: float
    final_gamma: np.ndarray
    converged: bool
    lam: float = float("nan")
    corr_B: np.ndarray | None = field(default=None, repr=False)


def _factor(C: np.ndarray):
    try:
        return linalg.cho_factor(C, lower=True, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("capacitance matrix is not numerically positive definite") from exc


def posterior_update(X, y, prior_D, lam: float):
    """Gaussian posterior of ``h`` given ``y = X h + z``.

    Returns ``(mean, cov)`` with ``mean = D X^H C^{-1} y`` and
    ``cov = D - D X^H C^{-1} X D`` where ``C = lam*I + X D X^H``. Unlike the
    information form ``(D^{-1} + X^H X / lam)^{-1}`` this stays valid for a
    singular prior.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    D = np.asarray(prior_D)
    N, L = X.shape
    if y.shape != (N,) or D.shape != (L, L):
        raise DimensionMismatchError(f"X {X.shape}, y {y.shape}, D {D.shape}")
    if not lam > 0:
        raise InvalidConfigError("lam must be positive")
    G = X @ D  # = (D X^H)^H for Hermitian D
    C = hermitian(G @ X.conj().T) + lam * np.eye(N)
    cf = _factor(C)
    sol = linalg.cho_solve(cf, np.column_stack([y, G]), check_finite=False)
    mean = G.conj().T @ sol[:, 0]
    cov = hermitian(D - G.conj().T @ sol[:, 1:])
    return mean, cov


def _block_moment(post_mean, post_cov, sl) -> np.ndarray:
    mu = post_mean[sl]
    return post_cov[sl, sl] + np.outer(mu, mu.conj())


def update_corr_B(post_mean, post_cov, partition: BlockPartition, gamma, active=None) -> np.ndarray:
    """Average of ``(Sigma_i + mu_i mu_i^H) / gamma_i`` over the active blocks."""
    gamma = np.asarray(gamma, dtype=float)
    if active is None:
        active = gamma > 0
    idx = np.flatnonzero(active)
    if idx.size == 0:
        raise AllBlocksPrunedError("no active block left to estimate B from")
    sls = partition.slices()
    d = partition.block_len_d
    acc = np.zeros((d, d), dtype=complex)
    for i in idx:
        acc += _block_moment(post_mean, post_cov, sls[i]) / gamma[i]
    return hermitian(acc / idx.size)


def toeplitz_coefficient(B) -> float:
    """Clamped lag-one ratio ``sign(m1/m0) * min(|m1/m0|, 0.9)``.

    ``m0``/``m1`` are the means of the main and first sub-diagonal. Only the
    real part of ``m1`` is used, so the result is a real AR(1) coefficient.
    """
    B = np.asarray(B)
    m0 = float(np.mean(np.diag(B)).real)
    if m0 == 0.0 or not np.isfinite(m0):
        raise DegenerateMatrixError("B has zero mean diagonal")
    if B.shape[0] < 2:
        return 0.0
    m1 = float(np.mean(np.diag(B, -1)).real)
    ratio = m1 / m0
    return float(np.sign(ratio) * min(abs(ratio), TOEPLITZ_BOUND))


def toeplitz_regularize(B) -> np.ndarray:
    r = toeplitz_coefficient(B)
    d = np.asarray(B).shape[0]
    return linalg.toeplitz(r ** np.arange(d)).astype(complex)


def update_gamma(post_mean, post_cov, B, partition: BlockPartition) -> np.ndarray:
    """``gamma_i = Tr[B^{-1} (Sigma_i + mu_i mu_i^H)] / d`` for every block."""
    d = partition.block_len_d
    moments = np.stack([_block_moment(post_mean, post_cov, sl) for sl in partition.slices()])
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMatrixError("B is singular") from exc
    g = np.einsum("ij,kji->k", Binv, moments).real / d
    return np.maximum(g, 0.0)


def update_lambda(y, X, post_mean, post_cov, prior_D, lambda_prev: float, active=None,
                  lambda_min: float = 1e-12) -> float:
    """Noise-level EM step ``(|y - X mu|^2 + lam [L_a - Tr(Sigma D_a^{-1})]) / N``.

    ``active`` is a per-tap mask; by default the taps with nonzero prior
    variance. The trace runs over the active taps only.
    """
    X = np.asarray(X)
    N = X.shape[0]
    D = np.asarray(prior_D)
    if active is None:
        active = np.diag(D).real > 0
    active = np.asarray(active, dtype=bool)
    resid = np.asarray(y) - X @ post_mean
    rss = float(np.vdot(resid, resid).real)
    n_act = int(active.sum())
    if n_act:
        Da = D[np.ix_(active, active)]
        Sa = post_cov[np.ix_(active, active)]
        tr = float(np.trace(np.linalg.solve(Da, Sa)).real)
    else:
        tr = 0.0
    lam = (rss + lambda_prev * (n_act - tr)) / N
    return max(lam, lambda_min)


def build_prior(gamma, B, partition: BlockPartition) -> np.ndarray:
    return np.kron(np.diag(np.asarray(gamma, dtype=float)), B)


def estimate_block(design, y, partition: BlockPartition, opts: SolverOptions | None = None) -> EstimationResult:
    """Run partition-aware BSBL-EM on one pilot observation.

    ``design`` may be a ``PilotDesign`` or a bare training matrix; ``y`` an
    ``Observation`` or a bare vector. Each iteration computes the posterior,
    then updates lam, B (optionally projected onto the Toeplitz family) and
    gamma. Blocks with ``gamma_i < gamma_prune_threshold * max(gamma)`` are
    pruned for good. The estimate is the posterior mean under the final
    hyperparameters.
    """
    opts = opts or SolverOptions()
    X = np.asarray(getattr(design, "training_X", design))
    yv = np.asarray(getattr(y, "received_y", y), dtype=complex)
    N, L = X.shape
    if partition.total_len != L:
        raise DimensionMismatchError(f"partition covers {partition.total_len} taps, X has {L} columns")
    if yv.shape != (N,):
        raise DimensionMismatchError(f"y has shape {yv.shape}, expected ({N},)")

    t0 = time.perf_counter()
    c, d = partition.num_blocks_c, partition.block_len_d
    if not np.any(yv):
        return EstimationResult(np.zeros(L, dtype=complex), 0, time.perf_counter() - t0,
                                np.zeros(c), True, opts.lambda_min, np.eye(d, dtype=complex))
    out = run_em(X, np.arange(c) * d, d, yv, opts, toeplitz_regularize)
    return EstimationResult(out.mean.ravel(), out.iterations, time.perf_counter() - t0,
                            out.gamma, out.converged, out.lam, out.B)
