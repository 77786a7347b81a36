"""Chain driver and snapshot-to-process conversion for all four models."""

import os
import pickle
import time

import numpy as np

from ..background import ConstantBackground, ErlangMixtureBackground
from ..baselines import EtasExcitation, LomaxKernel, ScaleUniformKernel
from ..excitation import BasisGrid, NonparExcitation
from ..marks import BetaMarks, TruncatedExponentialMarks
from .common import ChainOutput
from .etas import EtasSampler, SemiparSampler
from .nonpar import NonparSampler

MODELS = ("etas", "semipar", "nonpar", "nonpar-general")


def make_sampler(model, pattern, config):
    if model == "etas":
        return EtasSampler(pattern, config)
    if model == "semipar":
        return SemiparSampler(pattern, config)
    if model == "nonpar":
        return NonparSampler(pattern, config, general=False)
    if model == "nonpar-general":
        return NonparSampler(pattern, config, general=True)
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")


def run_chain(model, pattern, config, checkpoint_path=None, checkpoint_every=None, resume=False,
              progress=None):
    """Run one chain and return its :class:`ChainOutput`.

    Proposal scales adapt during burn-in (when ``config.adapt``) and are
    frozen afterwards.  Snapshots are kept for post-burn-in iterations whose
    index is a multiple of ``thin``; ``rho`` is traced every iteration.
    With ``checkpoint_path`` the full chain state is pickled every
    ``checkpoint_every`` iterations; ``resume=True`` continues from it and
    yields the same output as an uninterrupted run.
    """
    state = None
    if resume and checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path, "rb") as fh:
            state = pickle.load(fh)
        if state["model"] != model or state["config"] != config.to_dict():
            raise ValueError("checkpoint does not match the requested model and configuration")
    if state is None:
        state = dict(model=model, config=config.to_dict(), sampler=make_sampler(model, pattern, config),
                     it=0, snapshots=[], rho=[], wall=0.0)
    sampler = state["sampler"]
    start = time.perf_counter()
    wall0 = state["wall"]
    for it in range(state["it"], config.iterations):
        adapt_iter = it if (config.adapt and it < config.burn_in) else None
        sampler.sweep(it, adapt_iter)
        state["rho"].append(float(sampler.rho()))
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            state["snapshots"].append(sampler.snapshot())
        state["it"] = it + 1
        if progress is not None:
            progress(it + 1)
        if checkpoint_path and checkpoint_every and (it + 1) % checkpoint_every == 0:
            state["wall"] = wall0 + time.perf_counter() - start
            tmp = checkpoint_path + ".tmp"
            with open(tmp, "wb") as fh:
                pickle.dump(state, fh)
            os.replace(tmp, checkpoint_path)
    timings = dict(sampler.timer.totals)
    timings["wall"] = wall0 + time.perf_counter() - start
    return ChainOutput(model, sampler.meta(), state["snapshots"], state["rho"],
                       sampler.acceptance(), timings, config.to_dict())


def process_from_snapshot(model, meta, snap):
    """``(background, excitation, marks)`` for simulation from one snapshot."""
    if model in ("etas", "semipar"):
        kappa0 = meta["kappa0"]
        if model == "etas":
            kernel = LomaxKernel.lomax(float(snap["p"]), float(snap["c"]))
        else:
            kernel = ScaleUniformKernel(np.asarray(snap["atoms"], float), np.asarray(snap["weights"], float))
        excitation = EtasExcitation(float(snap["a"]), float(snap["b"]), kappa0, kernel)
        marks = TruncatedExponentialMarks(float(snap["psi"]), kappa0, np.inf)
        return ConstantBackground(float(snap["mu"])), excitation, marks
    if model in ("nonpar", "nonpar-general"):
        nu = np.asarray(snap["nu"], float)
        grid = BasisGrid(nu.shape[0], nu.shape[1], float(snap["theta"]), float(snap["d"]))
        kappa0, kappa_max = meta["kappa0"], meta["kappa_max"]
        excitation = NonparExcitation(nu, grid, kappa0, kappa_max)
        marks = BetaMarks(float(snap["a_beta"]), float(snap["b_beta"]), kappa0, kappa_max)
        if model == "nonpar":
            background = ConstantBackground(float(snap["mu"]))
        else:
            background = ErlangMixtureBackground(float(snap["phi"]), np.asarray(snap["omega"], float),
                                                 float(snap["e0"]), float(snap["b_g0"]))
        return background, excitation, marks
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
