"""Shared sampler machinery: configuration, M-H steps, branching draws, outputs."""

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import priors as P


class NumericalError(RuntimeError):
    """Non-finite log density encountered during sampling."""

    def __init__(self, iteration, block, detail=""):
        self.iteration, self.block = iteration, block
        super().__init__(f"non-finite log density at iteration {iteration} in block {block!r} {detail}".strip())


@dataclass
class ChainConfig:
    iterations: int = 20000
    burn_in: int = 10000
    thin: int = 5
    seed: int = 0
    stream: int = 0
    L: int = 20
    M: int = 15
    J: int = 100
    n_atoms: int = 50
    priors: dict = field(default_factory=lambda: {**P.preset("japan")["priors"], **P.preset("s42")["priors"]})
    proposal_scales: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)
    adapt: bool = True
    target_accept: float = 0.3
    check_invariants: bool = False
    blocked: bool = False

    def __post_init__(self):
        if self.iterations < 1 or self.thin < 1:
            raise ValueError("iterations and thin must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")
        if any(s <= 0 for s in self.proposal_scales.values()):
            raise ValueError("proposal scales must be positive")

    def to_dict(self):
        return asdict(self)


class RandomWalk:
    """Log-normal random-walk M-H on one positive scalar.

    During burn-in the log proposal scale follows a Robbins-Monro recursion
    toward ``target`` acceptance; afterwards it is frozen.
    """

    def __init__(self, name, scale=0.5, target=0.3):
        self.name = name
        self.log_scale = np.log(scale)
        self.target = target
        self.n_prop = 0
        self.n_acc = 0
        self.n_prop_post = 0
        self.n_acc_post = 0

    @property
    def scale(self):
        return float(np.exp(self.log_scale))

    def step(self, rng, current, log_target, adapt_iter=None, iteration=0):
        """Return the new value; ``log_target`` maps a value to its log density."""
        cur_lp = log_target(current)
        if not np.isfinite(cur_lp):
            raise NumericalError(iteration, self.name, f"(current value {current!r})")
        prop = current * np.exp(self.scale * rng.standard_normal())
        prop_lp = log_target(prop) if np.isfinite(prop) and prop > 0 else -np.inf
        # log-normal proposal asymmetry: q(cur|prop)/q(prop|cur) = prop/cur
        log_ratio = prop_lp - cur_lp + np.log(prop) - np.log(current)
        accept = np.isfinite(prop_lp) and np.log(rng.random()) < log_ratio
        self.n_prop += 1
        self.n_acc += int(accept)
        if adapt_iter is not None:
            gain = min(1.0, 2.0 / (adapt_iter + 1) ** 0.6)
            self.log_scale += gain * (float(accept) - self.target)
        else:
            self.n_prop_post += 1
            self.n_acc_post += int(accept)
        return prop if accept else current

    def acceptance(self):
        if self.n_prop_post:
            return self.n_acc_post / self.n_prop_post
        return self.n_acc / self.n_prop if self.n_prop else float("nan")


class Pairs:
    """All (child, parent) index pairs with parent earlier, sorted by lag."""

    def __init__(self, times):
        times = np.asarray(times, float)
        n = times.size
        child, parent = np.tril_indices(n, k=-1)
        lag = times[child] - times[parent]
        order = np.argsort(lag, kind="stable")
        self.child = child[order]
        self.parent = parent[order]
        self.lag = lag[order]
        self.n = n

    def within(self, xcut):
        k = int(np.searchsorted(self.lag, xcut, side="left"))
        return slice(0, k)


def draw_branching(rng, pairs, log_mu, log_h, sl=slice(None)):
    """Sample every ``y_i`` from its discrete full conditional.

    Given the model parameters the ``y_i`` are conditionally independent, so
    a systematic scan and a simultaneous draw coincide.  ``log_mu`` has one
    entry per event; ``log_h`` one per pair in ``sl``.
    """
    n = pairs.n
    if n == 0:
        return np.zeros(0, int)
    groups = np.concatenate([np.arange(n), pairs.child[sl]])
    logw = np.concatenate([log_mu, log_h])
    key = logw + rng.gumbel(size=logw.size)
    best = np.full(n, -np.inf)
    np.maximum.at(best, groups, key)
    if not np.all(np.isfinite(best)):
        bad = int(np.flatnonzero(~np.isfinite(best))[0])
        raise NumericalError(-1, "branching", f"(all candidate weights zero for event {bad + 1})")
    winners = np.flatnonzero(key == best[groups])
    winner = np.empty(n, int)
    winner[groups[winners[::-1]]] = winners[::-1]
    parent = pairs.parent[sl]
    if parent.size == 0:
        return np.zeros(n, int)
    y = np.where(winner < n, 0, parent[np.maximum(winner - n, 0)] + 1)
    return y


def branching_probabilities(log_mu_i, log_h_i):
    """Exact discrete conditional of one ``y_i`` (immigrant first, then parents)."""
    logw = np.concatenate([[log_mu_i], np.asarray(log_h_i, float)])
    w = np.exp(logw - np.max(logw))
    return w / w.sum()


def check_branching(y):
    y = np.asarray(y)
    if y.size and y[0] != 0:
        raise AssertionError("first event must be an immigrant")
    if np.any(y >= np.arange(1, y.size + 1)) or np.any(y < 0):
        raise AssertionError("parent must strictly precede its child")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


class ChainOutput:
    """Thinned post-burn-in snapshots plus per-iteration diagnostics."""

    def __init__(self, model, meta, snapshots, rho_trace, acceptance, timings, config):
        self.model = model
        self.meta = meta
        self.snapshots = snapshots
        self.rho_trace = np.asarray(rho_trace, float)
        self.acceptance = acceptance
        self.timings = timings
        self.config = config

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]

    def values(self, name):
        return np.array([s[name] for s in self.snapshots])

    def process_at(self, s):
        """``(background, excitation, marks)`` implied by snapshot ``s``."""
        from .models import process_from_snapshot

        return process_from_snapshot(self.model, self.meta, self.snapshots[s])

    def rho_samples(self):
        return self.values("rho")

    def write(self, snapshot_path, manifest_path, extra=None):
        with open(snapshot_path, "w", encoding="utf-8") as fh:
            for snap in self.snapshots:
                fh.write(json.dumps({k: _jsonable(v) for k, v in snap.items()}) + "\n")
        manifest = {
            "model": self.model,
            "meta": {k: _jsonable(v) for k, v in self.meta.items()},
            "config": self.config,
            "acceptance": self.acceptance,
            "timings": self.timings,
            "rho_trace": self.rho_trace.tolist(),
        }
        if extra:
            manifest.update(extra)
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, default=_jsonable)

    @classmethod
    def read(cls, snapshot_path, manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
        snaps = []
        with open(snapshot_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"corrupt snapshot record at line {line_no}") from exc
                snaps.append({k: np.asarray(v) if isinstance(v, list) else v for k, v in rec.items()})
        meta = manifest["meta"]
        meta = {k: (np.inf if v is None or v == "Infinity" else v) if k == "kappa_max" else v
                for k, v in meta.items()}
        return cls(manifest["model"], meta, snaps, manifest.get("rho_trace", []),
                   manifest.get("acceptance", {}), manifest.get("timings", {}), manifest.get("config", {}))


class Timer:
    def __init__(self):
        self.totals = {}

    def add(self, name, start):
        self.totals[name] = self.totals.get(name, 0.0) + time.perf_counter() - start
