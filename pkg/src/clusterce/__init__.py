"""Cluster-sparse OFDM channel estimation with block sparse Bayesian learning."""

from .baselines import block_omp, cosamp, omp, oracle_ls
from .bsbl_block import (
    BlockPartition,
    EstimationResult,
    SolverOptions,
    estimate_block,
    posterior_update,
    toeplitz_coefficient,
    toeplitz_regularize,
    update_corr_B,
    update_gamma,
    update_lambda,
)
from .bsbl_expand import ExpandedModel, collapse_f_to_h, estimate_expanded, expand_dictionary
from .channel_model import ChannelConfig, ChannelRealization, cluster_support, generate_channel
from .errors import ClusterCEError, InvalidConfigError
from .harness import ExperimentConfig, average_mse, run_monte_carlo, write_summary_csv
from .ofdm import Observation, PilotDesign, build_pilot_design, simulate_observation

__version__ = "0.1.0"

__all__ = [
    "BlockPartition", "ChannelConfig", "ChannelRealization", "ClusterCEError",
    "EstimationResult", "ExpandedModel", "ExperimentConfig", "InvalidConfigError",
    "Observation", "PilotDesign", "SolverOptions", "average_mse", "block_omp",
    "build_pilot_design", "cluster_support", "collapse_f_to_h", "cosamp",
    "estimate_block", "estimate_expanded", "expand_dictionary", "generate_channel",
    "omp", "oracle_ls", "posterior_update", "run_monte_carlo", "simulate_observation",
    "toeplitz_coefficient", "toeplitz_regularize", "update_corr_B", "update_gamma",
    "update_lambda", "write_summary_csv",
]
