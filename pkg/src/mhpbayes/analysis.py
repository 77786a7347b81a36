"""Posterior summaries, branching accuracy and forecast scoring."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .excitation import NonparExcitation, h0_matrix

FUNCTIONALS = ("alpha", "offspring_density", "tail_prob", "background", "rho", "mark_density")


def interval_score(l, u, y_obs, alpha):
    """Interval score of ``(l, u)`` at level ``1 - alpha`` for observation ``y_obs``.

    Width plus ``2/alpha`` times the distance by which ``y_obs`` falls
    outside the interval; smaller is better.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if l > u:
        raise ValueError("interval lower end exceeds upper end")
    score = (u - l) + (2.0 / alpha) * max(l - y_obs, 0.0) + (2.0 / alpha) * max(y_obs - u, 0.0)
    return float(score)


@dataclass
class BranchingScore:
    draws: np.ndarray
    mean: float
    sd: float


def misclassification(y_draws, labels):
    """Per-draw fraction of events whose immigrant/offspring status is wrong.

    ``labels`` holds ``"main"`` or ``"aftershock"`` per event.  Only the
    zero/non-zero pattern of each ``y`` matters.
    """
    if labels is None:
        raise ValueError("true main/aftershock labels are required")
    truth_main = np.array([lab == "main" for lab in labels])
    y = np.atleast_2d(np.asarray(y_draws))
    if y.shape[1] != truth_main.size:
        raise ValueError("branching draws and labels are not aligned")
    if truth_main.size == 0:
        raise ValueError("no events to score")
    wrong = (y == 0) != truth_main
    R = wrong.mean(axis=1)
    return BranchingScore(R, float(R.mean()), float(R.std(ddof=1)) if R.size > 1 else 0.0)


def order_statistic_interval(draws, alpha):
    """Empirical ``alpha/2`` and ``1 - alpha/2`` quantiles as order statistics.

    The lower end is the ``ceil(n alpha / 2)``-th smallest draw and the upper
    end the ``ceil(n (1 - alpha / 2))``-th; ranks are rounded before the
    ceiling so ``n alpha / 2`` landing on an integer is not pushed up by
    floating-point error.
    """
    x = np.sort(np.asarray(draws).ravel())
    n = x.size
    ranks = [np.ceil(np.round(n * q, 9)) for q in (alpha / 2, 1 - alpha / 2)]
    lo, hi = (x[int(min(max(r, 1), n)) - 1] for r in ranks)
    return lo, hi


@dataclass
class ForecastResult:
    draws: np.ndarray
    level: float = 0.95
    observed: int = None
    interval: tuple = field(init=False)
    interval_score: float = field(init=False)

    def __post_init__(self):
        self.draws = np.asarray(self.draws)
        if self.draws.size == 0:
            raise ValueError("no predictive draws")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")
        alpha = 1.0 - self.level
        lo, hi = order_statistic_interval(self.draws, alpha)
        self.interval = (float(lo), float(hi))
        self.interval_score = (interval_score(lo, hi, self.observed, alpha)
                               if self.observed is not None else None)


def forecast_summary(draws, observed=None, level=0.95):
    return ForecastResult(draws, level, observed)


@dataclass
class Summary:
    """Pointwise posterior mean and equal-tailed band on a grid."""

    functional: str
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95
    kappa: float = None

    def contains(self, values):
        values = np.asarray(values, float)
        return (self.lower <= values) & (values <= self.upper)

    def to_csv(self, path):
        """Columns ``grid_point, mean, q025, q975``, plus ``kappa`` for densities at a parent mark."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["grid_point", "mean", "q025", "q975"] + (["kappa"] if self.kappa is not None else []))
            for row in zip(self.grid, self.mean, self.lower, self.upper):
                if self.kappa is not None:
                    row = row + (self.kappa,)
                w.writerow([repr(float(v)) for v in row])


def _equal_tailed(values, level):
    alpha = 1.0 - level
    lo, hi = np.quantile(values, [alpha / 2, 1 - alpha / 2], axis=0)
    return values.mean(axis=0), lo, hi


def evaluate_functional(chain, s, functional, grid, kappa=None):
    """Value of ``functional`` on ``grid`` for snapshot ``s``.

    ``offspring_density`` and ``tail_prob`` evaluate over lags ``grid`` at
    parent mark ``kappa``; ``alpha`` and ``mark_density`` over marks;
    ``background`` over times.
    """
    snap = chain[s]
    if functional == "rho":
        return np.atleast_1d(float(snap["rho"]))
    background, excitation, marks = chain.process_at(s)
    grid = np.asarray(grid, float)
    if functional == "alpha":
        return excitation.alpha(grid)
    if functional == "offspring_density":
        return excitation.density(grid, kappa)
    if functional == "tail_prob":
        return excitation.sf(grid, kappa)
    if functional == "background":
        return np.broadcast_to(np.asarray(background.mu_of_t(grid), float), grid.shape).copy()
    if functional == "mark_density":
        return np.asarray(marks.pdf(grid), float)
    raise ValueError(f"unknown functional {functional!r}; choose from {FUNCTIONALS}")


def functional_summary(chain, functional, grid=None, kappa=None, level=0.95):
    """Posterior mean and equal-tailed ``level`` band of a functional over saved snapshots."""
    if len(chain) == 0:
        raise ValueError("chain has no snapshots")
    if functional not in FUNCTIONALS:
        raise ValueError(f"unknown functional {functional!r}; choose from {FUNCTIONALS}")
    if functional in ("offspring_density", "tail_prob") and kappa is None:
        raise ValueError(f"{functional} needs a parent mark")
    grid = np.zeros(1) if functional == "rho" else np.asarray(grid, float)
    values = np.array([evaluate_functional(chain, s, functional, grid, kappa) for s in range(len(chain))])
    mean, lo, hi = _equal_tailed(values, level)
    kappa = float(kappa) if functional in ("offspring_density", "tail_prob") else None
    return Summary(functional, grid, mean, lo, hi, level, kappa)


def rho_summary(chain, level=0.95):
    r = chain.rho_samples()
    if r.size == 0:
        raise ValueError("chain has no snapshots")
    mean, lo, hi = _equal_tailed(r, level)
    return dict(mean=float(mean), lower=float(lo), upper=float(hi),
                prob_above_one=float(np.mean(r > 1.0)))


def write_report(path, chain, extra=None):
    """Plain-text run report: rho summary, acceptance rates and extra scores."""
    rs = rho_summary(chain)
    lines = [
        f"model: {chain.model}",
        f"snapshots: {len(chain)}",
        f"rho mean: {rs['mean']:.4f}",
        f"rho 95% interval: ({rs['lower']:.4f}, {rs['upper']:.4f})",
        f"rho posterior mass above 1: {rs['prob_above_one']:.4f}",
    ]
    for k, v in sorted(chain.acceptance.items()):
        lines.append(f"acceptance {k}: {v:.3f}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return lines


def prior_excitation_draws(rng, n_draws, grid, hyper, kappa0, kappa_max):
    """Excitations built from prior draws of the basis weights (fixed ``theta, d``)."""
    h0 = h0_matrix(grid.L, grid.M, grid.theta, hyper.b1, hyper.b2)
    for _ in range(n_draws):
        nu = rng.gamma(hyper.c0 * h0, 1.0 / hyper.c0)
        yield NonparExcitation(nu, grid, kappa0, kappa_max)


__all__ = [
    "FUNCTIONALS", "BranchingScore", "ForecastResult", "order_statistic_interval", "Summary", "interval_score",
    "misclassification", "forecast_summary", "functional_summary", "evaluate_functional",
    "rho_summary", "write_report", "prior_excitation_draws",
]
