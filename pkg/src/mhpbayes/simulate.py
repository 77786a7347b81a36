"""Exact MHP generation through the cluster (branching) representation.

Offspring of a parent at ``t_p`` with mark ``kappa_p`` form a Poisson process
with intensity ``h(t - t_p, kappa_p)``: their number on a lag interval
``(lo, hi)`` is Poisson with mean ``alpha(kappa_p) [G(hi) - G(lo)]`` and the
lags are i.i.d. from ``g_kappa`` restricted to ``(lo, hi)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .background import ConstantBackground, ErlangMixtureBackground
from .baselines import EtasExcitation, LomaxKernel, etas_rho
from .catalog import LabeledPattern, MarkedPointPattern
from .excitation import NonparExcitation, rho as nonpar_rho, MarkDensityParams
from .kernels import seeded_rng
from .marks import BetaMarks, TruncatedExponentialMarks


class SimulationError(RuntimeError):
    pass


@dataclass
class GeneratorSpec:
    background: object
    excitation: object
    marks: object
    T: float
    seed: int = 0
    max_events: int = 10**6
    allow_unstable: bool = False
    rho: float = field(init=False)

    def __post_init__(self):
        self.rho = branching_ratio(self.excitation, self.marks)

    @property
    def kappa0(self):
        return self.marks.kappa0

    @property
    def kappa_max(self):
        return self.marks.kappa_max


def branching_ratio(excitation, marks):
    """``rho = E alpha(kappa)`` under the mark density; closed form where available."""
    if isinstance(excitation, EtasExcitation) and isinstance(marks, TruncatedExponentialMarks):
        from .baselines import EtasState

        st = EtasState(mu=1.0, a=excitation.a, b=excitation.b, psi=marks.psi, p=1.0, c=1.0)
        if marks.psi <= excitation.b:
            return np.inf
        return etas_rho(st, marks.kappa0, marks.kappa_max, truncated=np.isfinite(marks.kappa_max))
    if isinstance(excitation, NonparExcitation) and isinstance(marks, BetaMarks):
        return nonpar_rho(excitation.nu, excitation.grid, MarkDensityParams(marks.a, marks.b))
    lo, hi = marks.kappa0, marks.kappa_max
    val, _ = integrate.quad(lambda k: float(excitation.alpha(k)[0] * marks.pdf(k)), lo, hi, limit=200)
    return float(val)


def scenario(name, seed=0, T=5000.0, **overrides):
    """Simulation truths: ``lomax``, ``mark-lomax`` and ``lomax-mixture``.

    All use constant background, ``alpha = a exp{b (kappa - 4)}`` and
    exponential marks truncated to (4, 10).
    """
    presets = {
        "lomax": dict(mu=0.02, a=0.47, b=0.5, psi=1.0, kernel=LomaxKernel.lomax(20.0, 2.0)),
        "mark-lomax": dict(mu=0.01, a=0.32, b=0.5, psi=0.6, kernel=LomaxKernel.mark_shape(5.0, 1.0)),
        "lomax-mixture": dict(mu=0.01, a=0.32, b=0.5, psi=0.6, kernel=LomaxKernel.mark_mixture()),
    }
    if name not in presets:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(presets)}")
    cfg = {**presets[name], **overrides}
    kappa0, kappa_max = cfg.get("kappa0", 4.0), cfg.get("kappa_max", 10.0)
    return GeneratorSpec(
        background=ConstantBackground(cfg["mu"]),
        excitation=EtasExcitation(cfg["a"], cfg["b"], kappa0, cfg["kernel"]),
        marks=TruncatedExponentialMarks(cfg["psi"], kappa0, kappa_max),
        T=T,
        seed=seed,
        max_events=cfg.get("max_events", 10**6),
        allow_unstable=cfg.get("allow_unstable", False),
    )


def simulate_nhpp(intensity, bound, start, end, rng):
    """Thinning draw of a Poisson process with intensity ``intensity`` on ``(start, end)``."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    if bound == 0:
        return np.zeros(0)
    n = rng.poisson(bound * (end - start))
    cand = np.sort(rng.uniform(start, end, size=n))
    lam = np.asarray(intensity(cand), dtype=float) if n else np.zeros(0)
    if np.any(lam > bound * (1 + 1e-12)):
        raise ValueError("intensity exceeds the supplied bound")
    keep = rng.random(n) * bound < lam
    return cand[keep]


def _immigrants(background, rng, start, end):
    if isinstance(background, (ConstantBackground, ErlangMixtureBackground)):
        return background.sample_times(rng, start, end)
    if callable(background):
        raise TypeError("pass callable backgrounds through simulate_nhpp")
    return background.sample_times(rng, start, end)


def _offspring(rng, excitation, t_par, k_par, lo, hi):
    """Children of each parent with lags restricted to ``(lo, hi)`` (per parent)."""
    if t_par.size == 0:
        return np.zeros(0, int), np.zeros(0)
    mass = excitation.interval_masses(lo, hi, k_par).sum(axis=-1)
    mean = excitation.alpha(k_par) * mass
    counts = rng.poisson(mean)
    idx = np.repeat(np.arange(t_par.size), counts)
    lags = excitation.sample_lags(rng, k_par[idx], lo[idx], hi[idx])
    if lags.size and (np.any(lags > hi[idx]) or np.any(lags < lo[idx])):
        raise AssertionError("offspring lag outside its admissible interval")
    return idx, lags


def _grow(rng, excitation, marks, times, marks_arr, parents, frontier, end, max_events):
    """Recursively add offspring of ``frontier`` events until extinction."""
    times, marks_arr, parents = list(times), list(marks_arr), list(parents)
    frontier = np.asarray(frontier, int)
    t_all = np.asarray(times, float)
    k_all = np.asarray(marks_arr, float)
    while frontier.size:
        t_par, k_par = t_all[frontier], k_all[frontier]
        lo = np.zeros(frontier.size)
        hi = end - t_par
        idx, lags = _offspring(rng, excitation, t_par, k_par, lo, hi)
        if idx.size == 0:
            break
        new_t = t_par[idx] + lags
        new_k = marks.sample(rng, idx.size)
        start = t_all.size
        t_all = np.concatenate([t_all, new_t])
        k_all = np.concatenate([k_all, new_k])
        parents.extend(frontier[idx].tolist())
        if t_all.size > max_events:
            raise SimulationError(
                f"explosion guard: more than {max_events} events generated"
            )
        frontier = np.arange(start, t_all.size)
    return t_all, k_all, np.asarray(parents, int)


def _finalize(t_all, k_all, parents, n_hist=0):
    """Sort by time and map parent indices to 1-based positions (0 = immigrant)."""
    order = np.argsort(t_all, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    par_sorted = parents[order]
    y = np.where(par_sorted < 0, 0, rank[np.maximum(par_sorted, 0)] + 1)
    return t_all[order], k_all[order], y


def simulate_mhp(spec, rng=None):
    """Draw a marked pattern on ``(0, T)`` and its true branching structure.

    Returns ``(LabeledPattern, y)`` with ``y[i] = 0`` for immigrants and the
    1-based index of the parent otherwise.
    """
    if spec.rho >= 1 and not spec.allow_unstable:
        raise SimulationError(f"unstable specification: rho = {spec.rho:.4f} >= 1")
    rng = seeded_rng(spec.seed) if rng is None else rng
    imm = _immigrants(spec.background, rng, 0.0, spec.T)
    if imm.size > spec.max_events:
        raise SimulationError(f"explosion guard: more than {spec.max_events} events generated")
    k_imm = spec.marks.sample(rng, imm.size)
    t_all, k_all, parents = _grow(
        rng, spec.excitation, spec.marks, imm, k_imm, [-1] * imm.size,
        np.arange(imm.size), spec.T, spec.max_events,
    )
    t, k, y = _finalize(t_all, k_all, parents)
    pattern = MarkedPointPattern(t, k, spec.T, spec.kappa0, spec.kappa_max)
    labels = tuple("main" if v == 0 else "aftershock" for v in y)
    return LabeledPattern(pattern, labels), y


def continue_process(rng, background, excitation, marks, hist_times, hist_marks, start, end,
                     max_events=10**6):
    """Events on ``(start, end)`` given the history observed before ``start``.

    History events only seed offspring (their lag window is shifted to
    ``(start - t_i, end - t_i)``); new immigrants and all new events then
    branch as in :func:`simulate_mhp`.  Returns ``(times, marks)`` sorted.
    """
    hist_times = np.asarray(hist_times, float)
    hist_marks = np.asarray(hist_marks, float)
    idx, lags = _offspring(
        rng, excitation, hist_times, hist_marks, start - hist_times, end - hist_times
    )
    t_first = np.concatenate([_immigrants(background, rng, start, end), hist_times[idx] + lags])
    if t_first.size > max_events:
        raise SimulationError(f"explosion guard: more than {max_events} events generated")
    k_first = marks.sample(rng, t_first.size)
    t_all, k_all, _ = _grow(
        rng, excitation, marks, t_first, k_first, [-1] * t_first.size,
        np.arange(t_first.size), end, max_events,
    )
    order = np.argsort(t_all)
    return t_all[order], k_all[order]


def posterior_predictive_counts(chain, history, t_end, seed=0, max_events=10**6, start=None):
    """One predictive count on ``(start, t_end)`` per saved posterior snapshot.

    ``start`` defaults to the fitted window end.  Replicate ``s`` uses RNG
    stream ``s`` of ``seed``.
    """
    start = history.T if start is None else start
    if t_end <= start:
        raise ValueError("forecast horizon must end after it starts")
    if start < history.T:
        raise ValueError("forecast horizon overlaps the fitted window")
    counts = np.empty(len(chain), dtype=int)
    for s in range(len(chain)):
        background, excitation, marks = chain.process_at(s)
        rng = seeded_rng(seed, s)
        t, _ = continue_process(
            rng, background, excitation, marks, history.times, history.marks,
            start, t_end, max_events,
        )
        counts[s] = t.size
    return counts


def cluster_sizes(y):
    """Total descendants (all generations) of each immigrant in a branching vector."""
    y = np.asarray(y, int)
    root = np.zeros(y.size, int)
    for i, parent in enumerate(y):
        root[i] = i if parent == 0 else root[parent - 1]
    imm = np.flatnonzero(y == 0)
    sizes = np.bincount(root, minlength=y.size)[imm] - 1
    return sizes


def nonpar_spec(nu, grid, background, a_beta, b_beta, T, kappa0, kappa_max, seed=0, **kw):
    """Generator spec for the basis excitation with rescaled beta marks."""
    return GeneratorSpec(
        background=background,
        excitation=NonparExcitation(nu, grid, kappa0, kappa_max),
        marks=BetaMarks(a_beta, b_beta, kappa0, kappa_max),
        T=T,
        seed=seed,
        **kw,
    )
