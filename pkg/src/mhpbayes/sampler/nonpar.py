"""Gibbs/M-H sampler for the basis excitation model.

One sweep updates, in order: branching ``y``; basis assignments ``xi`` of
offspring; immigrant component labels ``zeta`` (Erlang-mixture background);
weights ``nu`` (and ``omega``); the M-H scalars ``theta, d, c0, b1, b2``;
mark-density parameters; background scalars.
"""

import time

import numpy as np
from scipy import special

from ..excitation import mark_exponents, rho as nonpar_rho, BasisGrid, MarkDensityParams
from ..kernels import erlang_cdf, log_erlang_pdf, sample_log_gamma, seeded_rng
from . import priors as P
from .common import NumericalError, Pairs, RandomWalk, Timer, check_branching, draw_branching

# Pairs whose log weight sits this far below every immigrant weight are
# dropped; e^-50 is below double-precision resolution of the total.
_PRUNE_GAP = 50.0


def log_gamma_density(log_x, x, shape, rate):
    return shape * np.log(rate) - special.gammaln(shape) + (shape - 1.0) * log_x - rate * x


class NonparSampler:
    def __init__(self, pattern, config, general=False):
        self.cfg = config
        self.general = general
        self.rng = seeded_rng(config.seed, config.stream)
        self.priors = config.priors
        self.L, self.M, self.J = config.L, config.M, config.J
        self.set_data(pattern)
        self._init_state()
        scales = config.proposal_scales
        names = ["theta", "d", "c0", "b1", "b2", "a_beta", "b_beta"]
        if general:
            names += ["phi", "e0", "b_g0"]
        self.walks = {k: RandomWalk(k, scales.get(k, 0.3), config.target_accept) for k in names}
        self.timer = Timer()

    # -- data ---------------------------------------------------------------

    def set_data(self, pattern):
        self.t = np.asarray(pattern.times, float)
        self.kappa = np.asarray(pattern.marks, float)
        self.n = self.t.size
        self.T = pattern.T
        self.kappa0, self.kappa_max = pattern.kappa0, pattern.kappa_max
        if not np.isfinite(self.kappa_max):
            raise ValueError("the basis model needs a bounded mark space")
        self.u = (self.kappa - self.kappa0) / (self.kappa_max - self.kappa0)
        self.log_u = np.log(self.u)
        self.log_1mu = np.log1p(-self.u)
        self.pairs = Pairs(self.t)
        self.horizon = self.T - self.t
        self._lvec = np.arange(1, self.L + 1)
        if hasattr(self, "y"):
            self.y = np.zeros(self.n, int)
            self.xi_l = np.zeros(0, int)
            self.xi_m = np.zeros(0, int)
            self.zeta = np.zeros(self.n, int)
            self._refresh_caches()

    def _init_state(self):
        pri, init = self.priors, self.cfg.init
        c = lambda k: float(init.get(k, P.center(pri[k])))
        self.theta, self.d, self.c0 = c("theta"), c("d"), c("c0")
        self.b1, self.b2 = c("b1"), c("b2")
        self.a_beta, self.b_beta = c("a_beta"), c("b_beta")
        h0 = self.h0(self.theta, self.b1, self.b2)
        self.nu = np.array(init.get("nu", h0), float)
        self.log_nu = np.log(self.nu)
        if self.general:
            self.phi, self.e0, self.b_g0 = c("phi"), c("e0"), c("b_g0")
            self.omega = np.array(init.get("omega", np.full(self.J, self.phi / self.b_g0)), float)
            self.log_omega = np.log(self.omega)
        else:
            self.mu = c("mu")
        self.y = np.array(init.get("y", np.zeros(self.n, int)), int)
        self.xi_l = np.zeros(0, int)
        self.xi_m = np.zeros(0, int)
        self.zeta = np.zeros(self.n, int)
        self._refresh_caches()

    def _refresh_caches(self):
        self.logB = self._log_basis(self.d)
        self.F = self._lag_cdf(self.theta)
        self._set_offspring()

    def _set_offspring(self):
        self.off = np.flatnonzero(self.y > 0)
        self.par = self.y[self.off] - 1
        self.off_lag = self.t[self.off] - self.t[self.par]
        self.imm = np.flatnonzero(self.y == 0)

    # -- model pieces --------------------------------------------------------

    def h0(self, theta, b1, b2):
        edges = (np.arange(self.L + 1) * theta) ** b1
        return np.repeat((np.diff(edges) * b2 / self.M)[:, None], self.M, axis=1)

    def _log_basis(self, d):
        return np.log(self.M) + np.multiply.outer(self.log_u, mark_exponents(self.M, d))

    def _lag_cdf(self, theta):
        if self.n == 0:
            return np.zeros((0, self.L))
        return np.atleast_2d(erlang_cdf(self.horizon[:, None], self._lvec, 1.0 / theta))

    def K(self, F=None, logB=None):
        F = self.F if F is None else F
        logB = self.logB if logB is None else logB
        return F.T @ np.exp(logB)

    def log_mu_events(self):
        if not self.general:
            return np.full(self.n, np.log(self.mu))
        lg = self._log_erlang_bg(self.phi)
        with np.errstate(divide="ignore"):
            return special.logsumexp(lg + self.log_omega, axis=1)

    def _log_erlang_bg(self, phi):
        return log_erlang_pdf(self.t[:, None], np.arange(1, self.J + 1), 1.0 / phi)

    def _xcut(self, log_mu_min, logC_max):
        """Lag beyond which every excitation weight is negligible next to ``mu``."""
        if not np.isfinite(log_mu_min):
            return np.inf
        L, th = self.L, self.theta
        target = log_mu_min - _PRUNE_GAP - logC_max

        def f(x):
            return float(log_erlang_pdf(x, L, 1.0 / th)) - target

        x = L * th
        if f(x) < 0:
            return x
        hi = 2 * x
        while f(hi) >= 0:
            hi *= 2
        lo = x
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if f(mid) >= 0 else (lo, mid)
        return hi

    def log_h_pairs(self, sl):
        par, lag = self.pairs.parent[sl], self.pairs.lag[sl]
        C = np.exp(self.logB[par]) @ self.nu.T
        G = np.exp(log_erlang_pdf(lag[:, None], self._lvec, 1.0 / self.theta))
        with np.errstate(divide="ignore"):
            return np.log(np.sum(C * G, axis=1))

    # -- updates -----------------------------------------------------------

    def update_y(self):
        log_mu = self.log_mu_events()
        if self.n == 0:
            self.y = np.zeros(0, int)
        else:
            Ctot = np.exp(self.logB) @ self.nu.sum(axis=0)
            with np.errstate(divide="ignore"):
                logC_max = np.log(np.max(Ctot))
            sl = self.pairs.within(self._xcut(np.min(log_mu), logC_max))
            self.y = draw_branching(self.rng, self.pairs, log_mu, self.log_h_pairs(sl), sl)
        self._set_offspring()

    def update_xi(self):
        if self.off.size == 0:
            self.xi_l = np.zeros(0, int)
            self.xi_m = np.zeros(0, int)
            return
        logB_par = self.logB[self.par]
        C = np.exp(logB_par) @ self.nu.T
        with np.errstate(divide="ignore"):
            logw_l = np.log(C) + log_erlang_pdf(self.off_lag[:, None], self._lvec, 1.0 / self.theta)
        self.xi_l = np.argmax(logw_l + self.rng.gumbel(size=logw_l.shape), axis=1)
        logw_m = self.log_nu[self.xi_l] + logB_par
        self.xi_m = np.argmax(logw_m + self.rng.gumbel(size=logw_m.shape), axis=1)

    def update_zeta(self):
        if not self.general or self.imm.size == 0:
            return
        lg = log_erlang_pdf(self.t[self.imm, None], np.arange(1, self.J + 1), 1.0 / self.phi)
        logw = lg + self.log_omega
        self.zeta = np.zeros(self.n, int)
        self.zeta[self.imm] = np.argmax(logw + self.rng.gumbel(size=logw.shape), axis=1)

    def counts(self):
        return np.bincount(self.xi_l * self.M + self.xi_m, minlength=self.L * self.M).reshape(self.L, self.M)

    def update_nu(self):
        shape = self.c0 * self.h0(self.theta, self.b1, self.b2) + self.counts()
        rate = self.c0 + self.K()
        self.log_nu = sample_log_gamma(self.rng, shape, rate)
        self.nu = np.exp(self.log_nu)

    def s_j(self, phi):
        return np.atleast_1d(erlang_cdf(self.T, np.arange(1, self.J + 1), 1.0 / phi))

    def update_omega(self):
        n_j = np.bincount(self.zeta[self.imm], minlength=self.J)
        shape = self.e0 * self.phi / self.b_g0 + n_j
        rate = self.e0 + self.s_j(self.phi)
        self.log_omega = sample_log_gamma(self.rng, shape, rate)
        self.omega = np.exp(self.log_omega)

    def update_mu(self):
        rate = self.T + self.priors["mu"][1]
        self.mu = self.rng.gamma(self.imm.size + 1.0, 1.0 / rate)

    # -- M-H log targets ---------------------------------------------------

    def _nu_prior(self, c0, theta, b1, b2):
        shape = c0 * self.h0(theta, b1, b2)
        return float(np.sum(log_gamma_density(self.log_nu, self.nu, shape, c0)))

    def lt_theta(self, theta):
        F = self._lag_cdf(theta)
        lp = P.logpdf(self.priors["theta"], theta)
        lp += np.sum(log_erlang_pdf(self.off_lag, self.xi_l + 1, 1.0 / theta))
        lp -= np.sum(self.nu * self.K(F=F))
        lp += self._nu_prior(self.c0, theta, self.b1, self.b2)
        return lp

    def lt_d(self, d):
        logB = self._log_basis(d)
        lp = P.logpdf(self.priors["d"], d)
        lp += np.sum(logB[self.par, self.xi_m])
        lp -= np.sum(self.nu * self.K(logB=logB))
        return lp

    def lt_c0(self, c0):
        return P.logpdf(self.priors["c0"], c0) + self._nu_prior(c0, self.theta, self.b1, self.b2)

    def lt_b1(self, b1):
        return P.logpdf(self.priors["b1"], b1) + self._nu_prior(self.c0, self.theta, b1, self.b2)

    def lt_b2(self, b2):
        return P.logpdf(self.priors["b2"], b2) + self._nu_prior(self.c0, self.theta, self.b1, b2)

    def _beta_ll(self, a, b):
        return float(np.sum((a - 1.0) * self.log_u + (b - 1.0) * self.log_1mu) - self.n * special.betaln(a, b))

    def lt_a_beta(self, a):
        return P.logpdf(self.priors["a_beta"], a) + self._beta_ll(a, self.b_beta)

    def lt_b_beta(self, b):
        return P.logpdf(self.priors["b_beta"], b) + self._beta_ll(self.a_beta, b)

    def _omega_prior(self, phi, e0, b_g0):
        return float(np.sum(log_gamma_density(self.log_omega, self.omega, e0 * phi / b_g0, e0)))

    def lt_phi(self, phi):
        lp = P.logpdf(self.priors["phi"], phi)
        if self.imm.size:
            lp += np.sum(log_erlang_pdf(self.t[self.imm], self.zeta[self.imm] + 1, 1.0 / phi))
        lp -= np.sum(self.omega * self.s_j(phi))
        lp += self._omega_prior(phi, self.e0, self.b_g0)
        return lp

    def lt_e0(self, e0):
        return P.logpdf(self.priors["e0"], e0) + self._omega_prior(self.phi, e0, self.b_g0)

    def lt_b_g0(self, b_g0):
        return P.logpdf(self.priors["b_g0"], b_g0) + self._omega_prior(self.phi, self.e0, b_g0)

    def _mh(self, name, adapt_iter, it):
        new = self.walks[name].step(self.rng, getattr(self, name), getattr(self, "lt_" + name),
                                    adapt_iter, it)
        setattr(self, name, new)
        return new

    # -- sweep ---------------------------------------------------------------

    def sweep(self, it, adapt_iter=None):
        tm = self.timer
        s = time.perf_counter()
        try:
            self.update_y()
        except NumericalError as exc:
            raise NumericalError(it, "branching", str(exc)) from None
        tm.add("branching", s)
        s = time.perf_counter()
        self.update_xi()
        self.update_zeta()
        tm.add("assignments", s)
        s = time.perf_counter()
        self.update_nu()
        if self.general:
            self.update_omega()
        tm.add("weights", s)
        s = time.perf_counter()
        theta_old = self.theta
        self._mh("theta", adapt_iter, it)
        if self.theta != theta_old:
            self.F = self._lag_cdf(self.theta)
        d_old = self.d
        self._mh("d", adapt_iter, it)
        if self.d != d_old:
            self.logB = self._log_basis(self.d)
        for name in ("c0", "b1", "b2"):
            self._mh(name, adapt_iter, it)
        tm.add("excitation_mh", s)
        s = time.perf_counter()
        self._mh("a_beta", adapt_iter, it)
        self._mh("b_beta", adapt_iter, it)
        tm.add("marks", s)
        s = time.perf_counter()
        if self.general:
            for name in ("phi", "e0", "b_g0"):
                self._mh(name, adapt_iter, it)
        else:
            self.update_mu()
        tm.add("background", s)
        if self.cfg.check_invariants:
            self.check_invariants()

    def check_invariants(self):
        check_branching(self.y)
        if self.xi_l.size != self.off.size or self.xi_m.size != self.off.size:
            raise AssertionError("xi must be defined exactly on offspring")
        if self.counts().sum() != self.off.size:
            raise AssertionError("basis counts must sum to the offspring count")
        if self.general and np.bincount(self.zeta[self.imm], minlength=self.J).sum() != self.imm.size:
            raise AssertionError("immigrant counts must sum to the immigrant count")
        if not (np.all(np.isfinite(self.log_nu)) and self.c0 > 0 and self.theta > 0):
            raise AssertionError("non-finite weights")

    def rho(self):
        return nonpar_rho(self.nu, BasisGrid(self.L, self.M, self.theta, self.d),
                          MarkDensityParams(self.a_beta, self.b_beta))

    def snapshot(self):
        snap = dict(theta=self.theta, d=self.d, c0=self.c0, b1=self.b1, b2=self.b2,
                    a_beta=self.a_beta, b_beta=self.b_beta, nu=self.nu.copy(),
                    y=self.y.copy(), rho=self.rho())
        if self.general:
            snap.update(phi=self.phi, e0=self.e0, b_g0=self.b_g0, omega=self.omega.copy())
        else:
            snap["mu"] = self.mu
        return snap

    def meta(self):
        return dict(L=self.L, M=self.M, J=self.J, T=self.T, kappa0=self.kappa0,
                    kappa_max=self.kappa_max, n=self.n)

    def acceptance(self):
        return {k: w.acceptance() for k, w in self.walks.items()}

    def scales(self):
        return {k: w.scale for k, w in self.walks.items()}
