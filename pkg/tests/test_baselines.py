import itertools

import numpy as np
import pytest

from clusterce.baselines import block_omp, cosamp, omp, oracle_ls
from clusterce.errors import InvalidConfigError, RankDeficientError

from .conftest import crandn


def _normalized(rng, N, L):
    X = crandn(rng, N, L)
    return X / np.linalg.norm(X, axis=0)


def exhaustive_best(X, y, groups):
    """Best LS fit over every candidate column group; returns the full-length vector."""
    best, best_res = None, np.inf
    for cols in groups:
        cols = list(cols)
        coef, *_ = np.linalg.lstsq(X[:, cols], y, rcond=None)
        res = np.linalg.norm(y - X[:, cols] @ coef)
        if res < best_res - 1e-12:
            best_res = res
            best = np.zeros(X.shape[1], dtype=complex)
            best[cols] = coef
    return best


# ---------------------------------------------------------------- oracle LS

def test_oracle_ls_noiseless(rng):
    X = _normalized(rng, 20, 30)
    S = [3, 4, 5, 17]
    h = np.zeros(30, dtype=complex)
    h[S] = crandn(rng, 4)
    np.testing.assert_allclose(oracle_ls(X, X @ h, S), h, atol=1e-10)


def test_oracle_ls_full_support_is_ordinary_ls(rng):
    X = crandn(rng, 12, 8)
    y = crandn(rng, 12)
    ref, *_ = np.linalg.lstsq(X, y, rcond=None)
    np.testing.assert_allclose(oracle_ls(X, y, range(8)), ref, atol=1e-12)


def test_oracle_ls_support_order_irrelevant(rng):
    X = crandn(rng, 10, 12)
    y = crandn(rng, 10)
    np.testing.assert_allclose(oracle_ls(X, y, [7, 1, 4]), oracle_ls(X, y, [1, 4, 7]), atol=1e-13)


def test_oracle_ls_rank_deficient(rng):
    X = crandn(rng, 6, 5)
    X[:, 2] = X[:, 1]
    with pytest.raises(RankDeficientError):
        oracle_ls(X, crandn(rng, 6), [1, 2])
    with pytest.raises(RankDeficientError):
        oracle_ls(X, crandn(rng, 6), [0, 1, 2, 3, 4])
    with pytest.raises(RankDeficientError):
        oracle_ls(crandn(rng, 3, 6), crandn(rng, 3), [0, 1, 2, 3])


def test_oracle_ls_error_matches_closed_form():
    from clusterce.ofdm import build_pilot_design, noise_variance_from_snr

    rng = np.random.default_rng(3)
    des = build_pilot_design(50, 100, 128, seed=5)
    X = des.training_X
    S = np.r_[10:15, 60:65]
    h = np.zeros(100, dtype=complex)
    h[S] = crandn(rng, 10)
    var = noise_variance_from_snr(10.0)
    expected = var * np.trace(np.linalg.inv(X[:, S].conj().T @ X[:, S])).real
    errs = []
    for _ in range(10_000):
        z = np.sqrt(var / 2) * (rng.standard_normal(50) + 1j * rng.standard_normal(50))
        errs.append(np.sum(np.abs(oracle_ls(X, X @ h + z, S) - h) ** 2))
    assert np.mean(errs) == pytest.approx(expected, rel=0.05)


# ---------------------------------------------------------------- OMP

def test_omp_one_sparse(rng):
    X = _normalized(rng, 16, 24)
    y = X[:, 11] * (0.7 - 1.1j)
    h = omp(X, y, 1)
    assert np.flatnonzero(h).tolist() == [11]
    assert h[11] == pytest.approx(0.7 - 1.1j, abs=1e-12)


def test_omp_zero(rng):
    assert not omp(_normalized(rng, 8, 10), np.zeros(8), 3).any()


@pytest.mark.parametrize("seed", range(8))
def test_omp_matches_exhaustive_two_sparse(seed):
    rng = np.random.default_rng(seed)
    X = _normalized(rng, 40, 12)
    h = np.zeros(12, dtype=complex)
    h[rng.choice(12, 2, replace=False)] = crandn(rng, 2) + 0.5
    y = X @ h
    ref = exhaustive_best(X, y, itertools.combinations(range(12), 2))
    np.testing.assert_allclose(omp(X, y, 2), ref, atol=1e-10)
    np.testing.assert_allclose(ref, h, atol=1e-10)


def test_omp_residual_orthogonal(rng):
    X = _normalized(rng, 20, 40)
    y = crandn(rng, 20)
    h = omp(X, y, 5)
    S = np.flatnonzero(h)
    assert S.size == 5
    np.testing.assert_allclose(X[:, S].conj().T @ (y - X @ h), 0, atol=1e-8)


def test_omp_tie_lowest_index():
    X = np.eye(4)
    assert np.flatnonzero(omp(X, np.array([1.0, 1.0, 0, 0]), 1)).tolist() == [0]


# ---------------------------------------------------------------- CoSaMP

def test_cosamp_one_sparse(rng):
    X = _normalized(rng, 20, 30)
    y = 2.5j * X[:, 7]
    h = cosamp(X, y, 1)
    assert np.flatnonzero(h).tolist() == [7]
    assert h[7] == pytest.approx(2.5j, abs=1e-10)


def test_cosamp_zero(rng):
    assert not cosamp(_normalized(rng, 8, 10), np.zeros(8), 2).any()


@pytest.mark.parametrize("seed", range(10))
def test_cosamp_residual_non_increasing(seed, monkeypatch):
    import clusterce.baselines as bl

    rng = np.random.default_rng(seed)
    X = _normalized(rng, 30, 60)
    h = np.zeros(60, dtype=complex)
    h[rng.choice(60, 6, replace=False)] = crandn(rng, 6)
    y = X @ h + 0.1 * crandn(rng, 30)
    norms = []
    real_ls = bl._ls

    def spy(Xs, yy):
        coef = real_ls(Xs, yy)
        norms.append(np.linalg.norm(yy - Xs @ coef))
        return coef

    monkeypatch.setattr(bl, "_ls", spy)
    out = cosamp(X, y, 6)
    accepted = np.linalg.norm(y - X @ out)
    # pruned-fit residuals (every second LS call) until the accepted one
    pruned = norms[1::2]
    kept = [r for r in pruned if r <= np.linalg.norm(y)]
    assert accepted == pytest.approx(min(kept), rel=1e-12)
    assert np.count_nonzero(out) <= 6
    S = np.flatnonzero(out)
    np.testing.assert_allclose(X[:, S].conj().T @ (y - X @ out), 0, atol=1e-8)


# ---------------------------------------------------------------- block OMP

def test_block_omp_one_block(rng):
    X = _normalized(rng, 20, 24)
    h = np.zeros(24, dtype=complex)
    h[8:12] = crandn(rng, 4)
    np.testing.assert_allclose(block_omp(X, X @ h, 4, 1), h, atol=1e-10)


def test_block_omp_d1_is_omp(rng):
    X = _normalized(rng, 15, 20)
    y = crandn(rng, 15)
    np.testing.assert_allclose(block_omp(X, y, 1, 4), omp(X, y, 4), atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_block_omp_matches_exhaustive_pairs(seed):
    rng = np.random.default_rng(seed)
    d, c = 3, 6
    X = _normalized(rng, 40, c * d)
    h = np.zeros(c * d, dtype=complex)
    for b in rng.choice(c, 2, replace=False):
        h[b * d : (b + 1) * d] = crandn(rng, d) + 0.5
    y = X @ h
    groups = [list(range(a * d, (a + 1) * d)) + list(range(b * d, (b + 1) * d))
              for a, b in itertools.combinations(range(c), 2)]
    ref = exhaustive_best(X, y, groups)
    np.testing.assert_allclose(block_omp(X, y, d, 2), ref, atol=1e-10)
    np.testing.assert_allclose(ref, h, atol=1e-10)


def test_block_omp_invalid_partition(rng):
    with pytest.raises(InvalidConfigError):
        block_omp(crandn(rng, 5, 10), crandn(rng, 5), 3, 1)


@pytest.mark.parametrize("fn", [
    lambda X, y: omp(X, y, 3),
    lambda X, y: cosamp(X, y, 3),
    lambda X, y: block_omp(X, y, 2, 2),
    lambda X, y: oracle_ls(X, y, [0, 5]),
])
def test_full_length_output(fn, rng):
    X = _normalized(rng, 12, 16)
    out = fn(X, crandn(rng, 12))
    assert out.shape == (16,)
