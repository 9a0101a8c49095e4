"""Block sparse Bayesian learning without a known block partition.

Every window ``h[i:i+d]`` (``k = L - d + 1`` of them, overlapping) gets its
own latent block ``f_i ~ CN(0, gamma_i B)``. The channel is the overlap-add
``h = sum_i E_i f_i``, so ``y = A f + z`` with ``A = [X E_1, ..., X E_k]``.
The latent prior is block diagonal, so the usual BSBL-EM updates apply in
``f``-space. Only the diagonal ``d x d`` blocks of the posterior covariance
are ever formed, and the linear algebra goes through the ``N x N``
capacitance matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._em import run_em
from .bsbl_block import EstimationResult, SolverOptions, toeplitz_regularize
from .errors import DimensionMismatchError, InvalidConfigError


@dataclass(frozen=True)
class ExpandedModel:
    block_len_d: int
    num_blocks_k: int
    A: np.ndarray
    channel_len_L: int

    def blocks(self) -> np.ndarray:
        """``A`` as a ``(k, N, d)`` stack of its column blocks."""
        N = self.A.shape[0]
        return self.A.reshape(N, self.num_blocks_k, self.block_len_d).transpose(1, 0, 2)


@dataclass
class ExpandedState:
    gamma: np.ndarray
    corr_B: np.ndarray
    lam: float
    post_mean_f: np.ndarray
    post_cov_blocks: np.ndarray  # (k, d, d) diagonal blocks of the posterior covariance
    iter: int = 0

    def prior_Dtilde(self) -> np.ndarray:
        return linalg.block_diag(*(g * self.corr_B for g in self.gamma))


def expand_dictionary(X, d: int) -> ExpandedModel:
    X = np.asarray(X)
    N, L = X.shape
    if not 1 <= d <= L:
        raise InvalidConfigError(f"window length d={d} must lie in [1, {L}]")
    k = L - d + 1
    win = np.lib.stride_tricks.sliding_window_view(X, d, axis=1)  # (N, k, d)
    return ExpandedModel(d, k, np.ascontiguousarray(win.reshape(N, k * d)), L)


def collapse_f_to_h(f, L: int, d: int) -> np.ndarray:
    """Overlap-add the ``k = L - d + 1`` latent windows back into a length-``L`` channel."""
    f = np.asarray(f)
    k = L - d + 1
    if d < 1 or k < 1 or f.shape != (k * d,):
        raise DimensionMismatchError(f"f has shape {f.shape}, expected ({k * d},)")
    h = np.zeros(L, dtype=np.result_type(f.dtype, float))
    fb = f.reshape(k, d)
    for j in range(d):
        h[j : j + k] += fb[:, j]
    return h


def estimate_expanded(design, y, d: int, opts: SolverOptions | None = None) -> EstimationResult:
    """Run BSBL-EM over all overlapping windows of length ``d`` and overlap-add the result."""
    opts = opts or SolverOptions()
    X = np.asarray(getattr(design, "training_X", design))
    yv = np.asarray(getattr(y, "received_y", y), dtype=complex)
    N, L = X.shape
    if yv.shape != (N,):
        raise DimensionMismatchError(f"y has shape {yv.shape}, expected ({N},)")

    t0 = time.perf_counter()
    if not 1 <= d <= L:
        raise InvalidConfigError(f"window length d={d} must lie in [1, {L}]")
    k = L - d + 1
    if not np.any(yv):
        return EstimationResult(np.zeros(L, dtype=complex), 0, time.perf_counter() - t0,
                                np.zeros(k), True, opts.lambda_min, np.eye(d, dtype=complex))
    # A = [X E_1, ..., X E_k] is never formed; the engine works on windows of X
    out = run_em(X, np.arange(k), d, yv, opts, toeplitz_regularize)
    h_hat = collapse_f_to_h(out.mean.ravel(), L, d)
    return EstimationResult(h_hat, out.iterations, time.perf_counter() - t0,
                            out.gamma, out.converged, out.lam, out.B)
