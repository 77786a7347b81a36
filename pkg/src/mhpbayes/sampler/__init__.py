"""MCMC samplers for the marked Hawkes models."""

from .common import ChainConfig, ChainOutput, NumericalError, RandomWalk, branching_probabilities
from .etas import EtasSampler, SemiparSampler, stick_weights
from .models import MODELS, make_sampler, process_from_snapshot, run_chain
from .nonpar import NonparSampler
from .priors import PRESETS, preset

__all__ = [
    "ChainConfig", "ChainOutput", "NumericalError", "RandomWalk", "branching_probabilities",
    "EtasSampler", "SemiparSampler", "NonparSampler", "stick_weights",
    "MODELS", "make_sampler", "process_from_snapshot", "run_chain", "PRESETS", "preset",
]
