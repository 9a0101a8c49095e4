"""Blockwise BSBL-EM engine shared by the two estimators.

The signal is ``h = sum_i E_i f_i``: latent length-``d`` blocks placed at
tap offsets ``starts[i]``. Each block is seen through the column window
``A_i = X E_i``. Disjoint windows give the partition-aware estimator and
sliding windows give the expanded one. Only the diagonal ``d x d``
posterior blocks are formed, and the linear algebra stays on the ``N x N``
capacitance matrix and the active tap support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateMatrixError, SingularSystemError


@dataclass
class EMOutcome:
    mean: np.ndarray  # (k, d), zero rows for pruned blocks
    gamma: np.ndarray
    lam: float
    B: np.ndarray
    iterations: int
    converged: bool


def hermitian(M):
    return 0.5 * (M + np.swapaxes(M, -1, -2).conj())


def _inv(B):
    try:
        return np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMatrixError("B is singular") from exc


def posterior_windows(X, starts, d: int, y, gamma, B, lam: float):
    """Posterior of the latent blocks ``f_i`` living on taps ``starts[i] : starts[i] + d``.

    Block ``i`` is observed through ``A_i = X[:, s_i:s_i+d]``, so
    ``C = lam*I + sum_i gamma_i A_i B A_i^H = lam*I + X_S M X_S^H``, where
    ``M`` is the overlap-add of the ``gamma_i B`` on the tap support ``S``.
    With ``Q = X_S^H C^{-1} X_S`` and ``z = X_S^H C^{-1} y``:
    ``mean_i = gamma_i B z_i`` and ``cov_i = gamma_i B - gamma_i^2 B Q_ii B``.
    Returns ``(mean (m, d), cov (m, d, d), A @ mean)``.
    """
    idx = starts[:, None] + np.arange(d)
    S, loc = np.unique(idx, return_inverse=True)
    loc = loc.reshape(idx.shape)
    gB = gamma[:, None, None] * B[None]
    M = np.zeros((S.size, S.size), dtype=complex)
    np.add.at(M, (loc[:, :, None], loc[:, None, :]), gB)
    XS = X[:, S]
    C = (XS @ M) @ XS.conj().T
    C = 0.5 * (C + C.conj().T)
    C[np.diag_indices(C.shape[0])] += lam
    try:
        cf = linalg.cho_factor(C, lower=True, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError("capacitance matrix is not numerically positive definite") from exc
    W = linalg.cho_solve(cf, np.concatenate([y[:, None], XS], axis=1), check_finite=False)
    XSh = XS.conj().T
    z = XSh @ W[:, 0]
    Q = XSh @ W[:, 1:]
    mean = (gB @ z[loc][:, :, None])[:, :, 0]
    cov = hermitian(gB - gB @ Q[loc[:, :, None], loc[:, None, :]] @ gB)
    hS = np.zeros(S.size, dtype=complex)
    np.add.at(hS, loc, mean)
    return mean, cov, XS @ hS


def _project(B, regularize):
    try:
        return regularize(B)
    except DegenerateMatrixError:
        return np.eye(B.shape[0], dtype=complex)


def run_em(X, starts, d: int, y, opts, regularize) -> EMOutcome:
    """EM over the latent blocks on taps ``starts[i] : starts[i] + d``.

    ``regularize`` maps B to its Toeplitz projection.
    """
    N = X.shape[0]
    starts = np.asarray(starts)
    k = starts.size
    gamma = np.full(k, float(opts.gamma_init))
    B = np.eye(d, dtype=complex)
    lam = max(opts.lambda_init, opts.lambda_min)
    mu = np.zeros((k, d), dtype=complex)
    per_iter = opts.use_toeplitz and not opts.toeplitz_final_only
    converged = False

    it = 0
    for it in range(1, opts.max_iters + 1):
        act = np.flatnonzero(gamma > 0)
        g = gamma[act]
        mean, cov, fitted = posterior_windows(X, starts[act], d, y, g, B, lam)
        moments = cov + mean[:, :, None] * mean[:, None, :].conj()

        if opts.learn_lambda:
            Binv = _inv(B)
            tr = float(np.einsum("ij,kji->k", Binv, cov).real @ (1.0 / g))
            resid = y - fitted
            rss = float(np.vdot(resid, resid).real)
            lam = max((rss + lam * (act.size * d - tr)) / N, opts.lambda_min)

        B = hermitian(np.sum(moments / g[:, None, None], axis=0) / act.size)
        if per_iter:
            B = _project(B, regularize)
        new_g = np.maximum(np.einsum("ij,kji->k", _inv(B), moments).real / d, 0.0)
        gamma = np.zeros(k)
        gamma[act] = new_g

        mu_new = np.zeros((k, d), dtype=complex)
        mu_new[act] = mean
        gmax = gamma.max()
        if gmax == 0.0:
            mu = np.zeros((k, d), dtype=complex)
            converged = True
            break
        gamma[gamma < opts.gamma_prune_threshold * gmax] = 0.0

        nn = np.linalg.norm(mu_new)
        change = np.linalg.norm(mu_new - mu) / nn if nn > 0 else 0.0
        mu = mu_new
        if change < opts.tol:
            converged = True
            break

    if opts.use_toeplitz and opts.toeplitz_final_only:
        B = _project(B, regularize)

    # output uses the final hyperparameters
    mean_out = np.zeros((k, d), dtype=complex)
    act = np.flatnonzero(gamma > 0)
    if act.size:
        mean_out[act], _, _ = posterior_windows(X, starts[act], d, y, gamma[act], B, lam)
    return EMOutcome(mean_out, gamma, lam, B, it, converged)
