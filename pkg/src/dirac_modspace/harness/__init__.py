"""Experiment harness: configs, runners, oracles and the command line."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, bundled_configs, load_config
from .experiments import RUNNERS, EstimateReport, run_experiment, write_outputs

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "ExperimentConfig",
    "bundled_configs",
    "load_config",
    "RUNNERS",
    "EstimateReport",
    "run_experiment",
    "write_outputs",
]
