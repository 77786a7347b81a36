"""Samplers for the ETAS model and its DP scale-uniform-mixture extension.

Both keep the stability region ``psi > b, a psi / (psi - b) < 1`` exactly:
``a`` and ``psi`` are drawn from truncated gamma full conditionals and M-H
proposals for ``b`` outside the region are rejected.
"""

import time

import numpy as np
from scipy import special

from ..kernels import lomax_cdf, log_lomax_pdf, sample_truncated_gamma, seeded_rng
from . import priors as P
from .common import NumericalError, Pairs, RandomWalk, Timer, check_branching, draw_branching


class EtasSampler:
    """Gibbs sweep: y, a, b/p/c (M-H), psi, mu."""

    mh_names = ("b", "p", "c")

    def __init__(self, pattern, config):
        self.cfg = config
        self.rng = seeded_rng(config.seed, config.stream)
        self.priors = config.priors
        self.set_data(pattern)
        self._init_state()
        scales = config.proposal_scales
        self.walks = {k: RandomWalk(k, scales.get(k, 0.3), config.target_accept) for k in self.mh_names}
        self.timer = Timer()

    def set_data(self, pattern):
        self.t = np.asarray(pattern.times, float)
        self.kappa = np.asarray(pattern.marks, float)
        self.n = self.t.size
        self.T = pattern.T
        self.kappa0 = pattern.kappa0
        self.dk = self.kappa - self.kappa0
        self.horizon = self.T - self.t
        self.pairs = Pairs(self.t)
        self.y = np.zeros(self.n, int)
        self._set_offspring()

    def _init_state(self):
        pri, init = self.priors, self.cfg.init
        c = lambda k: float(init.get(k, P.center(pri[k])))
        self.mu = c("mu")
        # Start inside the stability region: psi at its conditional mode, b = psi / 4.
        psi = self.n / self.dk.sum() if self.n else P.center(pri["psi"])
        self.psi = float(init.get("psi", psi))
        self.b = float(init.get("b", self.psi / 4.0))
        self.a = float(init.get("a", min(0.5, 0.5 * (self.psi - self.b) / self.psi)))
        self.p, self.c = c("p"), c("c")
        if not self.is_stable():
            raise ValueError("initial ETAS state violates the stability constraint")
        if "y" in init:
            self.y = np.array(init["y"], int)
            self._set_offspring()

    def _set_offspring(self):
        self.off = np.flatnonzero(self.y > 0)
        self.par = self.y[self.off] - 1
        self.off_lag = self.t[self.off] - self.t[self.par]
        self.n_imm = self.n - self.off.size

    def is_stable(self, a=None, b=None, psi=None):
        a = self.a if a is None else a
        b = self.b if b is None else b
        psi = self.psi if psi is None else psi
        return psi > b and a * psi / (psi - b) < 1.0

    # -- offspring density hooks (overridden by the semiparametric model) ----

    def log_g(self, lag):
        return log_lomax_pdf(lag, self.p, self.c)

    def G(self, H):
        return lomax_cdf(H, self.p, self.c)

    def pair_slice(self):
        return slice(None)

    # -- updates -------------------------------------------------------------

    def update_y(self):
        if self.n:
            sl = self.pair_slice()
            par, lag = self.pairs.parent[sl], self.pairs.lag[sl]
            with np.errstate(divide="ignore"):
                log_h = np.log(self.a) + self.b * self.dk[par] + self.log_g(lag)
            log_mu = np.full(self.n, np.log(self.mu))
            self.y = draw_branching(self.rng, self.pairs, log_mu, log_h, sl)
        self._set_offspring()

    def update_mu(self):
        rate = self.T + self.priors["mu"][1]
        self.mu = self.rng.gamma(self.n_imm + 1.0, 1.0 / rate)

    def update_a(self):
        rate = self.priors["a"][1] + np.sum(np.exp(self.b * self.dk) * self.G(self.horizon))
        upper = (self.psi - self.b) / self.psi
        self.a = sample_truncated_gamma(self.rng, self.off.size + 1.0, rate, 0.0, upper)

    def update_psi(self):
        rate = self.priors["psi"][1] + self.dk.sum()
        lower = self.b / (1.0 - self.a)
        self.psi = sample_truncated_gamma(self.rng, self.n + 1.0, rate, lower, np.inf)

    def lt_b(self, b):
        if not self.is_stable(b=b):
            return -np.inf
        lp = P.logpdf(self.priors["b"], b)
        lp += b * np.sum(self.dk[self.par])
        lp -= self.a * np.sum(np.exp(b * self.dk) * self.G(self.horizon))
        return lp

    def _lt_lomax(self, p, c):
        lp = np.sum(log_lomax_pdf(self.off_lag, p, c))
        lp -= self.a * np.sum(np.exp(self.b * self.dk) * lomax_cdf(self.horizon, p, c))
        return lp

    def lt_p(self, p):
        return P.logpdf(self.priors["p"], p) + self._lt_lomax(p, self.c)

    def lt_c(self, c):
        return P.logpdf(self.priors["c"], c) + self._lt_lomax(self.p, c)

    def _mh(self, name, adapt_iter, it):
        new = self.walks[name].step(self.rng, getattr(self, name), getattr(self, "lt_" + name),
                                    adapt_iter, it)
        setattr(self, name, new)

    def update_kernel(self, adapt_iter, it):
        self._mh("p", adapt_iter, it)
        self._mh("c", adapt_iter, it)

    def sweep(self, it, adapt_iter=None):
        tm = self.timer
        s = time.perf_counter()
        try:
            self.update_y()
        except NumericalError as exc:
            raise NumericalError(it, "branching", str(exc)) from None
        tm.add("branching", s)
        s = time.perf_counter()
        self.update_kernel(adapt_iter, it)
        tm.add("offspring_density", s)
        s = time.perf_counter()
        self.update_a()
        self._mh("b", adapt_iter, it)
        tm.add("productivity", s)
        s = time.perf_counter()
        self.update_psi()
        tm.add("marks", s)
        s = time.perf_counter()
        self.update_mu()
        tm.add("background", s)
        if not self.is_stable():
            raise NumericalError(it, "stability", "(stability constraint violated)")
        if self.cfg.check_invariants:
            check_branching(self.y)

    def rho(self):
        return self.a * self.psi / (self.psi - self.b)

    def snapshot(self):
        return dict(mu=self.mu, a=self.a, b=self.b, psi=self.psi, p=self.p, c=self.c,
                    y=self.y.copy(), rho=self.rho())

    def meta(self):
        return dict(T=self.T, kappa0=self.kappa0, kappa_max=np.inf, n=self.n)

    def acceptance(self):
        return {k: w.acceptance() for k, w in self.walks.items()}

    def scales(self):
        return {k: w.scale for k, w in self.walks.items()}


def stick_weights(v):
    """Stick-breaking weights from fractions ``v`` (last fraction is one)."""
    v = np.asarray(v, float)
    log_rest = np.concatenate([[0.0], np.cumsum(np.log1p(-v[:-1]))])
    return v * np.exp(log_rest)


def atom_proposal(rng, lags, a0, b0):
    """Draw from ``IG(a0 + n, b0)`` truncated to ``(max(lags), inf)``.

    This is the atom's full conditional under the uniform kernel before the
    window-edge normalizing term; ``1/theta`` is a truncated gamma draw.
    """
    lags = np.asarray(lags, float)
    upper = 1.0 / lags.max() if lags.size else np.inf
    prec = sample_truncated_gamma(rng, a0 + lags.size, b0, 0.0, upper)
    return 1.0 / prec


class SemiparSampler(EtasSampler):
    """ETAS with the Lomax density replaced by a truncated DP scale-uniform mixture."""

    mh_names = ("b", "a0")

    def _init_state(self):
        pri, init = self.priors, self.cfg.init
        self.N = self.cfg.n_atoms
        c = lambda k: float(init.get(k, P.center(pri[k])))
        self.alpha0, self.a0, self.b0 = c("alpha0"), c("a0"), c("b0")
        self.p, self.c = 1.0, 1.0
        super()._init_state()
        v = self.rng.beta(1.0, self.alpha0, size=self.N)
        v[-1] = 1.0
        self.v = np.array(init.get("v", v), float)
        self.weights = stick_weights(self.v)
        atoms = 1.0 / self.rng.gamma(self.a0, 1.0 / self.b0, size=self.N)
        self.atoms = np.array(init.get("atoms", atoms), float)
        self.s = np.zeros(0, int)

    def log_g(self, lag):
        dens = np.sum(np.where(lag[:, None] < self.atoms, self.weights / self.atoms, 0.0), axis=1)
        with np.errstate(divide="ignore"):
            return np.log(dens)

    def G(self, H, atoms=None, weights=None):
        atoms = self.atoms if atoms is None else atoms
        weights = self.weights if weights is None else weights
        return np.sum(weights * np.minimum(np.asarray(H)[:, None], atoms) / atoms, axis=1)

    def pair_slice(self):
        return self.pairs.within(np.max(self.atoms))

    def _edge_term(self, atoms, weights):
        """``a sum_j e^{b dk_j} G(T - t_j)``: the only non-conjugate factor."""
        return self.a * np.sum(np.exp(self.b * self.dk) * self.G(self.horizon, atoms, weights))

    def update_allocations(self):
        if self.off.size == 0:
            self.s = np.zeros(0, int)
            return
        with np.errstate(divide="ignore"):
            logw = np.where(self.off_lag[:, None] < self.atoms, np.log(self.weights / self.atoms), -np.inf)
        self.s = np.argmax(logw + self.rng.gumbel(size=logw.shape), axis=1)

    def update_atoms(self):
        for k in range(self.N):
            lags = self.off_lag[self.s == k]
            prop = atom_proposal(self.rng, lags, self.a0, self.b0)
            new = self.atoms.copy()
            new[k] = prop
            log_acc = self._edge_term(self.atoms, self.weights) - self._edge_term(new, self.weights)
            if np.log(self.rng.random()) < log_acc:
                self.atoms = new

    def update_sticks(self):
        n_k = np.bincount(self.s, minlength=self.N)
        tail = np.concatenate([np.cumsum(n_k[::-1])[::-1][1:], [0]])
        v = self.rng.beta(1.0 + n_k, self.alpha0 + tail)
        v[-1] = 1.0
        v = np.minimum(v, 1.0 - 1e-16)
        v[-1] = 1.0
        w = stick_weights(v)
        log_acc = self._edge_term(self.atoms, self.weights) - self._edge_term(self.atoms, w)
        if np.log(self.rng.random()) < log_acc:
            self.v, self.weights = v, w

    def update_alpha0(self):
        shape, rate = self.priors["alpha0"][1], self.priors["alpha0"][2]
        self.alpha0 = self.rng.gamma(shape + self.N - 1.0, 1.0 / (rate - np.sum(np.log1p(-self.v[:-1]))))

    def update_b0(self):
        pri = self.priors["b0"]
        shape, rate = (1.0, pri[1]) if pri[0] == "exp" else (pri[1], pri[2])
        self.b0 = self.rng.gamma(shape + self.N * self.a0, 1.0 / (rate + np.sum(1.0 / self.atoms)))

    def lt_a0(self, a0):
        lp = P.logpdf(self.priors["a0"], a0)
        lp += np.sum(a0 * np.log(self.b0) - special.gammaln(a0) - (a0 + 1.0) * np.log(self.atoms))
        return lp

    def update_kernel(self, adapt_iter, it):
        self.update_allocations()
        self.update_atoms()
        self.update_sticks()
        self.update_alpha0()
        self._mh("a0", adapt_iter, it)
        self.update_b0()

    def snapshot(self):
        return dict(mu=self.mu, a=self.a, b=self.b, psi=self.psi, atoms=self.atoms.copy(),
                    weights=self.weights.copy(), alpha0=self.alpha0, a0=self.a0, b0=self.b0,
                    y=self.y.copy(), rho=self.rho(), last_stick=float(self.weights[-1]))
