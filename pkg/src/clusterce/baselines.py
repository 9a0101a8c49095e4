"""Reference estimators: support-aware least squares and greedy pursuits.

All functions return a full length-``L`` vector that is zero off the
selected support. Ties in every greedy selection go to the lowest index.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import InvalidConfigError, RankDeficientError


def _as_support(support, L: int) -> np.ndarray:
    s = np.asarray(getattr(support, "indices", support), dtype=np.int64).ravel()
    if s.size and (s.min() < 0 or s.max() >= L):
        raise InvalidConfigError("support index out of range")
    if np.any(np.diff(s) <= 0):
        s = np.unique(s)
    return s


def _ls(Xs: np.ndarray, y: np.ndarray) -> np.ndarray:
    coef, *_ = linalg.lstsq(Xs, y, check_finite=False)
    return coef


def _top(score: np.ndarray, n: int) -> np.ndarray:
    # stable sort on -score keeps the lowest index first among equals
    return np.argsort(-score, kind="stable")[:n]


def oracle_ls(X, y, support) -> np.ndarray:
    """Least squares on the known support columns, via QR."""
    X = np.asarray(X)
    N, L = X.shape
    s = _as_support(support, L)
    h = np.zeros(L, dtype=complex)
    if s.size == 0:
        return h
    if s.size > N:
        raise RankDeficientError(f"support size {s.size} exceeds {N} observations")
    Q, R = linalg.qr(X[:, s], mode="economic", check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * max(N, s.size) * np.finfo(float).eps:
        raise RankDeficientError("training matrix restricted to the support is rank deficient")
    h[s] = linalg.solve_triangular(R, Q.conj().T @ y, check_finite=False)
    return h


def omp(X, y, sparsity: int) -> np.ndarray:
    X = np.asarray(X)
    y = np.asarray(y, dtype=complex)
    N, L = X.shape
    h = np.zeros(L, dtype=complex)
    if not np.any(y):
        return h
    sel: list[int] = []
    r = y
    coef = np.zeros(0, dtype=complex)
    for _ in range(min(sparsity, N, L)):
        corr = np.abs(X.conj().T @ r)
        corr[sel] = -1.0
        sel.append(int(np.argmax(corr)))
        coef = _ls(X[:, sel], y)
        r = y - X[:, sel] @ coef
    h[sel] = coef
    return h


def cosamp(X, y, sparsity: int, max_iter: int = 100, tol: float = 1e-6) -> np.ndarray:
    """CoSaMP; an iteration is kept only if it does not increase the residual."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=complex)
    N, L = X.shape
    s = min(sparsity, L)
    h = np.zeros(L, dtype=complex)
    if not np.any(y):
        return h
    r = y
    rnorm = np.linalg.norm(y)
    for _ in range(max_iter):
        proxy = np.abs(X.conj().T @ r)
        cand = np.union1d(_top(proxy, 2 * s), np.flatnonzero(h))
        if cand.size > N:
            cand = cand[_top(proxy[cand], N)]
            cand.sort()
        b = _ls(X[:, cand], y)
        keep = np.sort(_top(np.abs(b), s))
        T = cand[keep]
        coef = _ls(X[:, T], y)
        r_new = y - X[:, T] @ coef
        new_norm = np.linalg.norm(r_new)
        if new_norm > rnorm:
            break
        h = np.zeros(L, dtype=complex)
        h[T] = coef
        stalled = (rnorm - new_norm) <= tol * rnorm
        r, rnorm = r_new, new_norm
        if stalled:
            break
    return h


def block_omp(X, y, d: int, num_active_blocks: int) -> np.ndarray:
    """Greedy selection over the uniform partition into length-``d`` blocks."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=complex)
    N, L = X.shape
    if d < 1 or L % d:
        raise InvalidConfigError(f"block length {d} does not divide L={L}")
    c = L // d
    h = np.zeros(L, dtype=complex)
    if not np.any(y):
        return h
    sel: list[int] = []
    cols = np.zeros(0, dtype=np.int64)
    coef = np.zeros(0, dtype=complex)
    r = y
    for _ in range(min(num_active_blocks, c, N // d if N >= d else 0)):
        score = np.linalg.norm((X.conj().T @ r).reshape(c, d), axis=1)
        score[sel] = -1.0
        sel.append(int(np.argmax(score)))
        cols = np.concatenate([np.arange(b * d, (b + 1) * d) for b in sorted(sel)])
        coef = _ls(X[:, cols], y)
        r = y - X[:, cols] @ coef
    h[cols] = coef
    return h
