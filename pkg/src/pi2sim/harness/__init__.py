"""Experiment configuration, Monte-Carlo runners, metrics and result files."""

from .config import CONFIG_KEYS, KINDS, ExperimentConfig, load_config, parse_config
from .emit import emit, parse, render
from .experiments import ExperimentResult, output_path, run_experiment, trial_rng
from .metrics import BlerRecord, CcdfCurve, ccdf, ccdf_point, compute_papr

__all__ = [
    "CONFIG_KEYS",
    "KINDS",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "emit",
    "parse",
    "render",
    "ExperimentResult",
    "output_path",
    "run_experiment",
    "trial_rng",
    "BlerRecord",
    "CcdfCurve",
    "ccdf",
    "ccdf_point",
    "compute_papr",
]
