"""Pilot observation model ``y = diag(pilots) F h + z`` after the receiver DFT."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidConfigError

PILOT_SCHEMES = ("random", "equispaced")


@dataclass(frozen=True)
class PilotDesign:
    num_pilots_N: int
    num_subcarriers_Nd: int
    channel_len_L: int
    pilot_symbols: np.ndarray
    pilot_indices: np.ndarray
    dft_partial_F: np.ndarray
    training_X: np.ndarray


@dataclass(frozen=True)
class Observation:
    received_y: np.ndarray
    noise_var: float
    snr_db: float
    noise_seed: int


def partial_dft(pilot_indices, L: int, Nd: int) -> np.ndarray:
    """Rows ``p_k`` of the ``Nd``-point DFT restricted to the first ``L`` delays, scaled by ``1/sqrt(N)``."""
    p = np.asarray(pilot_indices, dtype=np.int64)
    # reduce p*l mod Nd in integers so the phase is exact for large products
    phase = np.outer(p, np.arange(L, dtype=np.int64)) % Nd
    return np.exp(-2j * np.pi * phase / Nd) / np.sqrt(p.shape[0])


def build_pilot_design(
    N: int,
    L: int,
    Nd: int,
    scheme: str = "random",
    seed: int = 0,
    unit_pilots: bool = False,
) -> PilotDesign:
    """Pick pilot subcarriers and QPSK pilot symbols and form ``X = diag(pilots) F``.

    ``unit_pilots=True`` forces every pilot symbol to 1 (debugging aid).
    """
    if min(N, L, Nd) < 1:
        raise InvalidConfigError("N, L and Nd must be positive")
    if L > Nd or N > Nd:
        raise InvalidConfigError(f"need L <= Nd and N <= Nd (got N={N}, L={L}, Nd={Nd})")
    if scheme not in PILOT_SCHEMES:
        raise InvalidConfigError(f"unknown pilot scheme {scheme!r}")

    rng = np.random.default_rng(seed)
    if scheme == "random":
        idx = np.sort(rng.choice(Nd, size=N, replace=False))
    else:
        idx = np.arange(N, dtype=np.int64) * Nd // N

    if unit_pilots:
        pilots = np.ones(N, dtype=complex)
    else:
        q = rng.integers(0, 4, size=N)
        pilots = np.exp(1j * (np.pi / 4 + np.pi / 2 * q))

    F = partial_dft(idx, L, Nd)
    return PilotDesign(
        num_pilots_N=N,
        num_subcarriers_Nd=Nd,
        channel_len_L=L,
        pilot_symbols=pilots,
        pilot_indices=idx.astype(np.int64),
        dft_partial_F=F,
        training_X=pilots[:, None] * F,
    )


def noise_variance_from_snr(snr_db: float) -> float:
    """Noise power for unit symbol energy: ``10**(-snr_db/10)``; zero at ``+inf``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return 10.0 ** (-snr_db / 10.0)


def complex_noise(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian noise with total variance ``var`` per entry."""
    w = rng.standard_normal((2, n))
    return np.sqrt(var / 2.0) * (w[0] + 1j * w[1])


def simulate_observation(design: PilotDesign, h, snr_db: float, noise_seed: int = 0) -> Observation:
    taps = getattr(h, "taps", h)
    taps = np.asarray(taps, dtype=complex)
    if taps.shape != (design.channel_len_L,):
        raise DimensionMismatchError(
            f"channel has shape {taps.shape}, design expects ({design.channel_len_L},)"
        )
    var = noise_variance_from_snr(snr_db)
    y = design.training_X @ taps
    if var > 0.0:
        rng = np.random.default_rng(noise_seed)
        y = y + complex_noise(rng, design.num_pilots_N, var)
    return Observation(received_y=y, noise_var=var, snr_db=float(snr_db), noise_seed=int(noise_seed))
