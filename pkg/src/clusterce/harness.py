"""Monte Carlo driver: SNR sweeps, MSE / timing aggregation and CSV output.

Each trial index draws one channel, one pilot design and one noise sequence
from seeds derived from ``(master_seed, trial_index, stream)``. Every
algorithm and every SNR in that trial then sees the same realizations, and
only the noise scale changes across SNR.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import partial

import numpy as np

from . import baselines
from .bsbl_block import BlockPartition, SolverOptions, estimate_block
from .bsbl_expand import estimate_expanded
from .channel_model import ChannelConfig, ChannelRealization, generate_channel
from .errors import (
    ClusterCEError,
    DimensionMismatchError,
    ExcessiveFailuresError,
    InvalidConfigError,
)
from .ofdm import PILOT_SCHEMES, PilotDesign, build_pilot_design, simulate_observation

log = logging.getLogger(__name__)

ALGORITHMS = ("bsbl_block", "bsbl_expand", "oracle_ls", "omp", "cosamp", "block_omp")
BSBL_ALGORITHMS = ("bsbl_block", "bsbl_expand")
CSV_HEADER = ("algorithm", "snr_db", "avg_mse", "avg_cpu_time_s", "num_trials")
MAX_FAILURE_FRACTION = 0.10

# stream tags for seed derivation
_CHANNEL, _PILOTS, _NOISE = 1, 2, 3


@dataclass(frozen=True)
class ExperimentConfig:
    L: int = 100
    N: int = 50
    Nd: int = 128
    d: int = 5
    num_active_clusters: int = 2
    intra_cluster_corr: float = 0.8
    aligned_clusters: bool = True
    allow_overlap: bool = False
    pilot_scheme: str = "random"
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    num_trials: int = 100
    algorithms: tuple[str, ...] = ALGORITHMS
    master_seed: int = 0
    # BSBL noise level fixed at the true noise power unless the solver
    # options for that algorithm say learn_lambda = true
    known_noise: bool = True
    solver_opts: dict = field(default_factory=dict)
    nonzero_taps: tuple[int, ...] = ()
    workers: int = 1
    output_path: str = ""

    def validate(self) -> None:
        if self.num_trials < 1:
            raise InvalidConfigError("num_trials must be >= 1")
        if not self.snr_grid_db:
            raise InvalidConfigError("snr_grid_db must not be empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise InvalidConfigError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
        if self.pilot_scheme not in PILOT_SCHEMES:
            raise InvalidConfigError(f"unknown pilot scheme {self.pilot_scheme!r}")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidConfigError("master_seed must be a 64-bit unsigned integer")
        for alg in self.solver_opts:
            if alg not in BSBL_ALGORITHMS:
                raise InvalidConfigError(f"solver options given for non-BSBL algorithm {alg!r}")
        for t in self.nonzero_taps:
            if t < 1 or t % self.d:
                raise InvalidConfigError(f"nonzero_taps={t} is not a positive multiple of d={self.d}")
        self.channel_config(0).validate()
        for alg in BSBL_ALGORITHMS:
            self.options_for(alg)
        if self.L > self.Nd or self.N > self.Nd:
            raise InvalidConfigError("need L <= Nd and N <= Nd")

    def channel_config(self, seed: int) -> ChannelConfig:
        return ChannelConfig(
            length_L=self.L,
            cluster_len_d=self.d,
            num_active_clusters=self.num_active_clusters,
            intra_cluster_corr=self.intra_cluster_corr,
            allow_overlap=self.allow_overlap,
            seed=seed,
            grid_aligned=self.aligned_clusters,
        )

    def options_for(self, alg: str) -> SolverOptions:
        try:
            return SolverOptions(**self.solver_opts.get(alg, {}))
        except TypeError as exc:
            raise InvalidConfigError(f"bad solver option for {alg}: {exc}") from exc


@dataclass(frozen=True)
class TrialRecord:
    algorithm: str
    snr_db: float
    trial: int
    sq_error: float
    cpu_time_s: float
    ok: bool = True
    input_digest: str = ""
    error: str = ""


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    snr_db: float
    avg_mse: float
    avg_cpu_time_s: float
    num_trials: int
    nonzero_taps: int | None = None


def derive_seed(master_seed: int, trial_index: int, stream: int) -> int:
    """64-bit seed from ``(master_seed, trial_index, stream)`` via numpy's SeedSequence hash."""
    ss = np.random.SeedSequence([int(master_seed), int(trial_index), int(stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def average_mse(truths, estimates) -> float:
    """Mean over trials of ``||h - h_hat||_2^2``."""
    if len(truths) != len(estimates):
        raise DimensionMismatchError("truths and estimates differ in count")
    if not truths:
        raise ValueError("average_mse needs at least one trial")
    total = 0.0
    for h, g in zip(truths, estimates):
        h = np.asarray(h)
        g = np.asarray(g)
        if h.shape != g.shape:
            raise DimensionMismatchError(f"shapes {h.shape} and {g.shape} differ")
        total += float(np.sum(np.abs(h - g) ** 2))
    return total / len(truths)


def _pad_columns(X: np.ndarray, d: int) -> np.ndarray:
    extra = (-X.shape[1]) % d
    return np.pad(X, ((0, 0), (0, extra))) if extra else X


def run_estimator(alg: str, cfg: ExperimentConfig, design: PilotDesign, obs, channel: ChannelRealization):
    """Channel estimate of one algorithm. Only this call is timed (wall clock) by the driver."""
    X, y, L, d = design.training_X, obs.received_y, cfg.L, cfg.d
    if alg in BSBL_ALGORITHMS:
        opts = cfg.options_for(alg)
        if cfg.known_noise and not cfg.solver_opts.get(alg, {}).get("learn_lambda", False):
            opts = replace(opts, learn_lambda=False, lambda_init=max(obs.noise_var, opts.lambda_min))
        if alg == "bsbl_block":
            # a partition needs d | L; trailing zero columns complete the last block
            Xp = _pad_columns(X, d)
            return estimate_block(Xp, y, BlockPartition.uniform(Xp.shape[1], d), opts).h_hat[:L]
        return estimate_expanded(X, y, d, opts).h_hat
    if alg == "oracle_ls":
        return baselines.oracle_ls(X, y, channel.support())
    sparsity = int(channel.support().size)
    if alg == "omp":
        return baselines.omp(X, y, sparsity)
    if alg == "cosamp":
        return baselines.cosamp(X, y, sparsity)
    if alg == "block_omp":
        Xp = _pad_columns(X, d)
        return baselines.block_omp(Xp, y, d, cfg.num_active_clusters)[:L]
    raise InvalidConfigError(f"unknown algorithm {alg!r}")


def _digest(*arrays) -> str:
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


def run_trial(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    """All (SNR, algorithm) records for one trial index."""
    channel = generate_channel(cfg.channel_config(derive_seed(cfg.master_seed, trial, _CHANNEL)))
    design = build_pilot_design(cfg.N, cfg.L, cfg.Nd, cfg.pilot_scheme,
                                derive_seed(cfg.master_seed, trial, _PILOTS))
    noise_seed = derive_seed(cfg.master_seed, trial, _NOISE)
    records = []
    for snr in cfg.snr_grid_db:
        obs = simulate_observation(design, channel, snr, noise_seed)
        digest = _digest(channel.taps, design.training_X, obs.received_y)
        for alg in cfg.algorithms:
            t0 = time.perf_counter()
            try:
                h_hat = run_estimator(alg, cfg, design, obs, channel)
            except (ClusterCEError, np.linalg.LinAlgError, FloatingPointError) as exc:
                records.append(TrialRecord(alg, snr, trial, math.nan, time.perf_counter() - t0,
                                           False, digest, repr(exc)))
                continue
            elapsed = time.perf_counter() - t0
            err = float(np.sum(np.abs(channel.taps - h_hat) ** 2))
            records.append(TrialRecord(alg, snr, trial, err, elapsed, True, digest))
    return records


def run_trials(cfg: ExperimentConfig) -> list[TrialRecord]:
    cfg.validate()
    trials = range(cfg.num_trials)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            # map preserves trial order, so the records match a serial run
            per_trial = list(pool.map(partial(run_trial, cfg), trials))
    else:
        per_trial = [run_trial(cfg, t) for t in trials]
    return [r for recs in per_trial for r in recs]


def summarize(records, cfg: ExperimentConfig, nonzero_taps: int | None = None) -> list[SummaryRow]:
    rows = []
    for alg in sorted(set(cfg.algorithms)):
        for snr in sorted(set(cfg.snr_grid_db)):
            cell = [r for r in records if r.algorithm == alg and r.snr_db == snr]
            good = [r for r in cell if r.ok]
            failed = len(cell) - len(good)
            if failed:
                log.warning("%s @ %g dB: %d of %d trials failed", alg, snr, failed, len(cell))
            if failed > MAX_FAILURE_FRACTION * len(cell) or not good:
                raise ExcessiveFailuresError(
                    f"{alg} @ {snr} dB: {failed} of {len(cell)} trials failed "
                    f"(first error: {next(r.error for r in cell if not r.ok)})"
                )
            rows.append(SummaryRow(
                algorithm=alg,
                snr_db=float(snr),
                avg_mse=float(np.mean([r.sq_error for r in good])),
                avg_cpu_time_s=float(np.mean([r.cpu_time_s for r in good])),
                num_trials=len(good),
                nonzero_taps=nonzero_taps,
            ))
    return rows


def run_monte_carlo(cfg: ExperimentConfig) -> list[SummaryRow]:
    """One SummaryRow per (algorithm, SNR) cell, or per (taps, algorithm, SNR) in tap-sweep mode."""
    cfg.validate()
    if not cfg.nonzero_taps:
        return summarize(run_trials(cfg), cfg)
    rows = []
    for taps in cfg.nonzero_taps:
        sub = replace(cfg, num_active_clusters=taps // cfg.d, nonzero_taps=())
        rows.extend(summarize(run_trials(sub), sub, nonzero_taps=taps))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def write_summary_csv(rows, path) -> None:
    """Write the summary table, sorted by algorithm then SNR.

    A trailing ``nonzero_taps`` column is added only for tap-sweep runs.
    """
    rows = sorted(rows, key=lambda r: (r.nonzero_taps or 0, r.algorithm, r.snr_db))
    with_taps = any(r.nonzero_taps is not None for r in rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER + (("nonzero_taps",) if with_taps else ()))
        for r in rows:
            line = [r.algorithm, _fmt(r.snr_db), _fmt(r.avg_mse), _fmt(r.avg_cpu_time_s), r.num_trials]
            if with_taps:
                line.append(r.nonzero_taps)
            w.writerow(line)


def read_summary_csv(path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        rows = []
        for rec in csv.DictReader(fh):
            taps = rec.get("nonzero_taps")
            rows.append(SummaryRow(rec["algorithm"], float(rec["snr_db"]), float(rec["avg_mse"]),
                                   float(rec["avg_cpu_time_s"]), int(rec["num_trials"]),
                                   int(taps) if taps else None))
        return rows


# --- config files ---------------------------------------------------------

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    raise InvalidConfigError(f"not a boolean: {v!r}")


def _parse_value(name: str, raw: str, kind):
    raw = raw.strip()
    try:
        if kind is bool:
            return _parse_bool(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "ints":
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if kind == "strs":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        return raw
    except ValueError as exc:
        raise InvalidConfigError(f"bad value for {name}: {raw!r}") from exc


_KINDS = {
    "L": int, "N": int, "Nd": int, "d": int, "num_active_clusters": int,
    "intra_cluster_corr": float, "aligned_clusters": bool, "allow_overlap": bool,
    "pilot_scheme": str, "snr_grid_db": "floats", "num_trials": int,
    "algorithms": "strs", "master_seed": int, "known_noise": bool,
    "nonzero_taps": "ints", "workers": int, "output_path": str,
}
_OPT_KINDS = {f.name: f.type for f in fields(SolverOptions)}


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Solver options use dotted keys, e.g. ``bsbl_block.max_iters = 300``.
    """
    values: dict = {}
    solver: dict = {k: dict(v) for k, v in (base.solver_opts if base else {}).items()}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if "." in key:
            alg, opt = key.split(".", 1)
            if opt not in _OPT_KINDS:
                raise InvalidConfigError(f"line {lineno}: unknown solver option {opt!r}")
            kind = {"int": int, "float": float, "bool": bool}.get(str(_OPT_KINDS[opt]), float)
            solver.setdefault(alg, {})[opt] = _parse_value(key, raw, kind)
            continue
        if key not in _KINDS:
            raise InvalidConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw, _KINDS[key])
    cfg = replace(base or ExperimentConfig(), **values, solver_opts=solver)
    return cfg


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config_text(text)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides)
