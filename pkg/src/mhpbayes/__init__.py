"""Bayesian nonparametric inference for marked Hawkes processes."""

from .catalog import LabeledPattern, MarkedPointPattern, load_catalog, save_catalog
from .sampler import ChainConfig, ChainOutput, run_chain
from .simulate import GeneratorSpec, scenario, simulate_mhp

__version__ = "0.1.0"

__all__ = [
    "LabeledPattern", "MarkedPointPattern", "load_catalog", "save_catalog",
    "ChainConfig", "ChainOutput", "run_chain",
    "GeneratorSpec", "scenario", "simulate_mhp",
]
