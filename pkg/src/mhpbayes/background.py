"""Immigrant (background) intensities: constant and Erlang mixture."""

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .kernels import erlang_cdf, erlang_sf, log_erlang_pdf


@dataclass(frozen=True)
class ConstantBackground:
    mu: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    def mu_of_t(self, t):
        return np.full(np.shape(t), float(self.mu)) if np.ndim(t) else float(self.mu)

    def integrated(self, T, start=0.0):
        return self.mu * (T - start)

    def sample_times(self, rng, start, end):
        n = rng.poisson(self.mu * (end - start))
        return np.sort(rng.uniform(start, end, size=n))


@dataclass(frozen=True)
class ErlangMixtureBackground:
    """``mu(t) = sum_j omega_j Erlang(t | j, 1/phi)`` for j = 1..J."""

    phi: float
    omega: np.ndarray = field(repr=False)
    e0: float = 1.0
    b_g0: float = 1.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "omega", omega)
        if self.phi <= 0:
            raise ValueError("phi must be positive")
        if omega.ndim != 1 or omega.size == 0 or np.any(omega < 0):
            raise ValueError("omega must be a non-empty vector of non-negative weights")

    @property
    def J(self):
        return self.omega.size

    def mu_of_t(self, t):
        t = np.asarray(t, dtype=float)
        j = np.arange(1, self.J + 1)
        dens = np.exp(log_erlang_pdf(t[..., None], j, 1.0 / self.phi))
        out = dens @ self.omega
        return out if out.ndim else float(out)

    def s_j(self, T):
        return np.atleast_1d(erlang_cdf(T, np.arange(1, self.J + 1), 1.0 / self.phi))

    def integrated(self, T, start=0.0):
        j = np.arange(1, self.J + 1)
        mass = erlang_sf(start, j, 1.0 / self.phi) - erlang_sf(T, j, 1.0 / self.phi)
        return float(self.omega @ np.atleast_1d(mass))

    def sample_times(self, rng, start, end):
        """Composition sampler: Poisson count per component, then truncated Erlang times."""
        j = np.arange(1, self.J + 1)
        s_lo = np.atleast_1d(erlang_sf(start, j, 1.0 / self.phi))
        s_hi = np.atleast_1d(erlang_sf(end, j, 1.0 / self.phi))
        counts = rng.poisson(self.omega * np.clip(s_lo - s_hi, 0.0, None))
        comp = np.repeat(np.arange(self.J), counts)
        s = s_hi[comp] + rng.random(comp.size) * (s_lo[comp] - s_hi[comp])
        t = special.gammainccinv(j[comp], s) * self.phi
        return np.sort(np.clip(t, start, end))

    def upper_bound(self):
        """Bound on ``sup_t mu(t)`` from the component density maxima."""
        j = np.arange(1, self.J + 1)
        mode = (j - 1) * self.phi
        peak = np.exp(log_erlang_pdf(mode, j, 1.0 / self.phi))
        return float(self.omega @ peak)

    def effective_support(self):
        return self.J * self.phi + 2.0 * self.phi * np.sqrt(self.J)


def mu_of_t(t, bg):
    return bg.mu_of_t(t)


def s_j(j, phi, T):
    """``S_j(phi)``: Erlang(j, 1/phi) mass on ``(0, T)``."""
    return float(erlang_cdf(T, j, 1.0 / phi))


def integrated_background(bg, T):
    return float(bg.integrated(T))


def prior_omega(rng, J, phi, e0, b_g0):
    """Gamma-process increments ``omega_j ~ Ga(e0 phi / b_g0, e0)``."""
    return rng.gamma(e0 * phi / b_g0, 1.0 / e0, size=J)
