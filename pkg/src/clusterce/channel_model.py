"""Synthetic cluster-sparse channel realizations.

A channel is a length-``L`` complex tap vector in which every nonzero tap
belongs to one of a few runs of ``d`` consecutive taps. Taps inside a run
are circularly-symmetric complex Gaussian with AR(1) Toeplitz correlation,
and each realization is scaled to unit energy.

With ``grid_aligned`` the clusters occupy whole blocks of the uniform
length-``d`` partition, which is the situation the partition-aware estimator
assumes. Otherwise cluster starts are arbitrary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InvalidConfigError


@dataclass(frozen=True)
class ChannelConfig:
    length_L: int = 100
    cluster_len_d: int = 5
    num_active_clusters: int = 2
    intra_cluster_corr: float = 0.0
    allow_overlap: bool = False
    seed: int = 0
    grid_aligned: bool = False

    def validate(self) -> None:
        if self.length_L < 1 or self.cluster_len_d < 1 or self.num_active_clusters < 1:
            raise InvalidConfigError("L, d and num_active_clusters must be positive")
        if self.cluster_len_d > self.length_L:
            raise InvalidConfigError("cluster length exceeds channel length")
        if not 0.0 <= self.intra_cluster_corr < 1.0:
            raise InvalidConfigError("intra_cluster_corr must lie in [0, 1)")
        if self.grid_aligned:
            if self.num_active_clusters > self.length_L // self.cluster_len_d:
                raise InvalidConfigError("more clusters than grid slots of length d")
        elif not self.allow_overlap:
            if self.num_active_clusters * self.cluster_len_d > self.length_L:
                raise InvalidConfigError(
                    f"{self.num_active_clusters} clusters of length {self.cluster_len_d} "
                    f"do not fit without overlap in L={self.length_L}"
                )
        elif self.num_active_clusters > self.length_L - self.cluster_len_d + 1:
            raise InvalidConfigError("more clusters than distinct start positions")


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray
    active_starts: tuple[int, ...]
    cluster_len: int
    energy: float = field(default=0.0)

    @property
    def length(self) -> int:
        return self.taps.shape[0]

    def support_mask(self) -> np.ndarray:
        mask = np.zeros(self.length, dtype=bool)
        for s in self.active_starts:
            mask[s : s + self.cluster_len] = True
        return mask

    def support(self) -> np.ndarray:
        """Sorted indices covered by the planted clusters."""
        return np.flatnonzero(self.support_mask())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            for i, t in enumerate(self.taps):
                w.writerow([i, repr(float(t.real)), repr(float(t.imag))])


def ar1_toeplitz(r: float, d: int) -> np.ndarray:
    """``Toeplitz([1, r, r**2, ..., r**(d-1)])``."""
    return linalg.toeplitz(r ** np.arange(d))


def _draw_starts(rng: np.random.Generator, cfg: ChannelConfig) -> np.ndarray:
    L, d, c = cfg.length_L, cfg.cluster_len_d, cfg.num_active_clusters
    if cfg.grid_aligned:
        # starts restricted to multiples of d, i.e. clusters are whole blocks
        # of the uniform partition
        return np.sort(rng.choice(L // d, size=c, replace=False)) * d
    if cfg.allow_overlap:
        starts = rng.choice(L - d + 1, size=c, replace=False)
        return np.sort(starts)
    # uniform over non-overlapping placements: pick c of the L - c*(d-1)
    # compressed slots, then re-inflate each preceding cluster to length d
    slots = np.sort(rng.choice(L - c * (d - 1), size=c, replace=False))
    return slots + np.arange(c) * (d - 1)


def generate_channel(cfg: ChannelConfig) -> ChannelRealization:
    """Draw one unit-energy cluster-sparse channel, deterministic in ``cfg.seed``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    d = cfg.cluster_len_d
    starts = _draw_starts(rng, cfg)

    chol = np.linalg.cholesky(ar1_toeplitz(cfg.intra_cluster_corr, d))
    h = np.zeros(cfg.length_L, dtype=complex)
    for s in starts:
        w = rng.standard_normal((2, d))
        seg = chol @ (w[0] + 1j * w[1]) / np.sqrt(2.0)
        # overlapping clusters superpose into one longer block
        h[s : s + d] += seg

    energy = float(np.vdot(h, h).real)
    if energy == 0.0:  # pragma: no cover - probability zero
        raise InvalidConfigError("drew an all-zero channel")
    h /= np.sqrt(energy)
    return ChannelRealization(
        taps=h,
        active_starts=tuple(int(s) for s in starts),
        cluster_len=d,
        energy=float(np.vdot(h, h).real),
    )


def cluster_support(h, tol: float = 0.0) -> list[tuple[int, int]]:
    """Maximal runs of indices with ``|h| > tol`` as inclusive ``(first, last)`` pairs."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    active = np.abs(np.asarray(h)) > tol
    if not active.any():
        return []
    padded = np.concatenate(([False], active, [False])).astype(np.int8)
    edges = np.diff(padded)
    firsts = np.flatnonzero(edges == 1)
    lasts = np.flatnonzero(edges == -1) - 1
    return [(int(a), int(b)) for a, b in zip(firsts, lasts)]
