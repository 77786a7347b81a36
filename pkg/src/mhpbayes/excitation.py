"""Basis/gamma-process excitation model and its functionals.

The excitation function is

    h(x, kappa) = sum_l sum_m nu[l, m] * Erlang(x | l, 1/theta) * b_m(kappa; d),

with mark basis ``b_m(kappa; d) = M * u**((m - 1)**d)`` and gamma-process
weights ``nu``.  Indices ``l`` and ``m`` are 1-based in the public scalar
functions (matching the model) and 0-based in array layouts.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .kernels import erlang_cdf, erlang_sf, log_erlang_pdf

__all__ = [
    "BasisGrid",
    "GammaProcessHyper",
    "MarkDensityParams",
    "MixtureExcitation",
    "NonparExcitation",
    "u_kappa",
    "mark_exponents",
    "basis_mark",
    "basis_matrix",
    "log_basis_matrix",
    "h0_cell",
    "h0_matrix",
    "excitation_h",
    "alpha_of_kappa",
    "rho",
    "offspring_weights",
    "offspring_density",
    "tail_probability",
    "prior_alpha_moments",
    "k_matrix",
    "k_lm",
    "effective_support",
]


@dataclass(frozen=True)
class BasisGrid:
    L: int
    M: int
    theta: float
    d: float

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.M < 2:
            raise ValueError("M must be >= 2 for an increasing total offspring intensity")
        if not (np.isfinite(self.theta) and self.theta > 0):
            raise ValueError("theta must be finite and positive")
        if not (np.isfinite(self.d) and self.d > 0):
            raise ValueError("d must be finite and positive")


@dataclass(frozen=True)
class GammaProcessHyper:
    c0: float
    b1: float
    b2: float

    def __post_init__(self):
        if min(self.c0, self.b1, self.b2) <= 0:
            raise ValueError("gamma process hyperparameters must be positive")


@dataclass(frozen=True)
class MarkDensityParams:
    a_beta: float
    b_beta: float

    def __post_init__(self):
        if self.a_beta <= 0 or self.b_beta <= 0:
            raise ValueError("beta mark density parameters must be positive")


def _check_marks(kappa, kappa0, kappa_max):
    kappa = np.asarray(kappa, dtype=float)
    if np.any((kappa <= kappa0) | (kappa >= kappa_max)):
        raise ValueError("mark outside the open interval (kappa0, kappa_max)")
    return kappa


def u_kappa(kappa, kappa0, kappa_max):
    kappa = _check_marks(kappa, kappa0, kappa_max)
    return (kappa - kappa0) / (kappa_max - kappa0)


def mark_exponents(M, d):
    """Exponents ``(m - 1)**d`` for m = 1..M, with the m = 1 entry fixed at 0."""
    m = np.arange(1, M + 1, dtype=float)
    out = np.zeros(M)
    # Huge d (an extreme proposal) overflows to inf, the correct limit: u^inf = 0 for u < 1.
    with np.errstate(over="ignore"):
        out[1:] = np.exp(d * np.log(m[1:] - 1.0))
    return out


def log_basis_matrix(kappa, M, d, kappa0, kappa_max):
    """``log b_m(kappa; d)`` as an array of shape ``kappa.shape + (M,)``."""
    u = u_kappa(kappa, kappa0, kappa_max)
    return np.log(M) + np.multiply.outer(np.log(u), mark_exponents(M, d))


def basis_matrix(kappa, M, d, kappa0, kappa_max):
    return np.exp(log_basis_matrix(kappa, M, d, kappa0, kappa_max))


def basis_mark(kappa, m, grid, kappa0, kappa_max):
    """Mark basis ``b_m(kappa; d) = M u^{(m-1)^d}``; ``b_1`` is the constant M."""
    if not 1 <= m <= grid.M:
        raise ValueError("m must lie in 1..M")
    u = u_kappa(kappa, kappa0, kappa_max)
    if m == 1:
        return grid.M * np.ones_like(u)
    return grid.M * np.exp(np.exp(grid.d * np.log(m - 1.0)) * np.log(u))


def h0_cell(l, m, grid, hyper):
    """Centering-measure mass ``H0(A_lm)`` (Weibull in lag times exponential in mark)."""
    if not (1 <= l <= grid.L and 1 <= m <= grid.M):
        raise ValueError("cell index out of range")
    th, b1 = grid.theta, hyper.b1
    return ((l * th) ** b1 - ((l - 1) * th) ** b1) * hyper.b2 / grid.M


def h0_matrix(L, M, theta, b1, b2):
    edges = (np.arange(L + 1) * theta) ** b1
    return np.repeat((np.diff(edges) * b2 / M)[:, None], M, axis=1)


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


def _lag_components(x, L, theta):
    """Erlang densities ``ga(x | l, 1/theta)`` for l = 1..L, shape x.shape + (L,)."""
    l = np.arange(1, L + 1)
    x = np.asarray(x, dtype=float)[..., None]
    return np.exp(log_erlang_pdf(x, l, 1.0 / theta))


def _mark_loadings(kappa, nu, grid, kappa0, kappa_max):
    """``C[..., l] = sum_m nu[l, m] b_m(kappa)``."""
    B = basis_matrix(kappa, grid.M, grid.d, kappa0, kappa_max)
    return B @ np.asarray(nu).T


def excitation_h(x, kappa, nu, grid, kappa0, kappa_max):
    x, kappa = np.broadcast_arrays(np.asarray(x, float), np.asarray(kappa, float))
    C = _mark_loadings(kappa, nu, grid, kappa0, kappa_max)
    return np.sum(C * _lag_components(x, grid.L, grid.theta), axis=-1)


def alpha_of_kappa(kappa, nu, grid, kappa0, kappa_max):
    """Total offspring intensity ``sum_m V_m b_m(kappa)`` with ``V_m = sum_l nu[l, m]``."""
    V = np.asarray(nu).sum(axis=0)
    return basis_matrix(kappa, grid.M, grid.d, kappa0, kappa_max) @ V


def rho(nu, grid, markparams):
    """Expected total offspring intensity under the rescaled beta mark density."""
    a, b = markparams.a_beta, markparams.b_beta
    V = np.asarray(nu).sum(axis=0)
    e = mark_exponents(grid.M, grid.d)
    log_ratio = special.betaln(a + e, b) - special.betaln(a, b)
    return float(grid.M * np.sum(V * np.exp(log_ratio)))


def offspring_weights(kappa, nu, grid, kappa0, kappa_max):
    """Mark-dependent Erlang weights ``W_l(kappa)``; rows sum to one."""
    C = _mark_loadings(kappa, nu, grid, kappa0, kappa_max)
    total = C.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("zero total offspring intensity at some mark")
    return C / total


def offspring_density(x, kappa, nu, grid, kappa0, kappa_max):
    x, kappa = np.broadcast_arrays(np.asarray(x, float), np.asarray(kappa, float))
    W = offspring_weights(kappa, nu, grid, kappa0, kappa_max)
    return np.sum(W * _lag_components(x, grid.L, grid.theta), axis=-1)


def tail_probability(x, kappa, nu, grid, kappa0, kappa_max):
    """Probability that an offspring lag exceeds ``x``, as a function of parent mark."""
    x, kappa = np.broadcast_arrays(np.asarray(x, float), np.asarray(kappa, float))
    W = offspring_weights(kappa, nu, grid, kappa0, kappa_max)
    l = np.arange(1, grid.L + 1)
    sf = erlang_sf(x[..., None], l, 1.0 / grid.theta)
    return np.clip(np.sum(W * sf, axis=-1), 0.0, 1.0)


def prior_alpha_moments(kappa, grid, hyper, kappa0, kappa_max):
    """Analytic prior mean and variance of ``alpha(kappa)`` given hyperparameters."""
    u = u_kappa(kappa, kappa0, kappa_max)
    e = mark_exponents(grid.M, grid.d)
    powers = np.exp(np.multiply.outer(np.log(u), e))
    scale = hyper.b2 * (grid.L * grid.theta) ** hyper.b1
    mean = scale * powers.sum(axis=-1)
    var = scale * grid.M / hyper.c0 * (powers**2).sum(axis=-1)
    return mean, var


def k_matrix(times, marks, T, grid, kappa0, kappa_max):
    """``K[l, m] = sum_j b_m(kappa_j) P(T - t_j | l, 1/theta)`` as an (L, M) array."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros((grid.L, grid.M))
    l = np.arange(1, grid.L + 1)
    F = erlang_cdf((T - times)[:, None], l, 1.0 / grid.theta)
    B = basis_matrix(marks, grid.M, grid.d, kappa0, kappa_max)
    return F.T @ B


def k_lm(l, m, grid, pattern):
    """Single entry of :func:`k_matrix` for a :class:`MarkedPointPattern`."""
    K = k_matrix(pattern.times, pattern.marks, pattern.T, grid, pattern.kappa0, pattern.kappa_max)
    return float(K[l - 1, m - 1])


def effective_support(L, theta):
    """Upper end ``L theta + 2 theta sqrt(L)`` of the offspring-density support proxy."""
    return L * theta + 2.0 * theta * np.sqrt(L)


# ---------------------------------------------------------------------------
# Mixture interface used by simulation and posterior summaries
# ---------------------------------------------------------------------------


class MixtureExcitation:
    """Excitation ``alpha(kappa) * sum_c w_c(kappa) g_c(x | kappa)``.

    Subclasses supply ``alpha``, ``comp_weights`` and the per-component
    ``comp_pdf``/``comp_sf``/``comp_isf``.  Arrays ``x`` and ``kappa`` passed
    to the component methods are 1-D and aligned.
    """

    kappa0 = 0.0

    def alpha(self, kappa):
        raise NotImplementedError

    def comp_weights(self, kappa):
        raise NotImplementedError

    def comp_pdf(self, x, kappa):
        raise NotImplementedError

    def comp_sf(self, x, kappa):
        raise NotImplementedError

    def comp_isf(self, s, kappa, comp):
        raise NotImplementedError

    @staticmethod
    def _aligned(x, kappa):
        x, kappa = np.broadcast_arrays(np.atleast_1d(np.asarray(x, float)),
                                       np.atleast_1d(np.asarray(kappa, float)))
        return x.ravel(), kappa.ravel()

    def density(self, x, kappa):
        x, kappa = self._aligned(x, kappa)
        return np.sum(self.comp_weights(kappa) * self.comp_pdf(x, kappa), axis=-1)

    def sf(self, x, kappa):
        x, kappa = self._aligned(x, kappa)
        return np.clip(np.sum(self.comp_weights(kappa) * self.comp_sf(x, kappa), axis=-1), 0.0, 1.0)

    def cdf(self, x, kappa):
        return 1.0 - self.sf(x, kappa)

    def h(self, x, kappa):
        x, kappa = self._aligned(x, kappa)
        return self.alpha(kappa) * self.density(x, kappa)

    def interval_masses(self, lo, hi, kappa):
        """Per-component mass ``w_c [S_c(lo) - S_c(hi)]`` of lags in ``(lo, hi)``."""
        lo, kappa = self._aligned(lo, kappa)
        hi = np.broadcast_to(np.asarray(hi, float), lo.shape)
        w = self.comp_weights(kappa)
        return w * np.clip(self.comp_sf(lo, kappa) - self.comp_sf(hi, kappa), 0.0, None)

    def sample_lags(self, rng, kappa, lo, hi):
        """One lag per entry, drawn from ``g_kappa`` restricted to ``(lo, hi)``."""
        kappa = np.atleast_1d(np.asarray(kappa, float))
        lo = np.broadcast_to(np.asarray(lo, float), kappa.shape)
        hi = np.broadcast_to(np.asarray(hi, float), kappa.shape)
        if kappa.size == 0:
            return np.zeros(0)
        mass = self.interval_masses(lo, hi, kappa)
        with np.errstate(divide="ignore"):
            logm = np.log(mass)
        comp = np.argmax(logm + rng.gumbel(size=logm.shape), axis=-1)
        s_lo = self._select(self.comp_sf(lo, kappa), comp)
        s_hi = self._select(self.comp_sf(hi, kappa), comp)
        s = s_hi + rng.random(kappa.shape) * (s_lo - s_hi)
        lag = self.comp_isf(s, kappa, comp)
        return np.clip(lag, lo, hi)

    @staticmethod
    def _select(mat, comp):
        return mat[np.arange(mat.shape[0]), comp]


class NonparExcitation(MixtureExcitation):
    """Basis excitation with Erlang lag components and mark-dependent weights."""

    def __init__(self, nu, grid, kappa0, kappa_max):
        self.nu = np.asarray(nu, dtype=float)
        if self.nu.shape != (grid.L, grid.M):
            raise ValueError("nu must have shape (L, M)")
        if np.any(self.nu < 0):
            raise ValueError("weights must be non-negative")
        self.grid = grid
        self.kappa0 = kappa0
        self.kappa_max = kappa_max
        self._l = np.arange(1, grid.L + 1)

    def alpha(self, kappa):
        return alpha_of_kappa(np.atleast_1d(kappa), self.nu, self.grid, self.kappa0, self.kappa_max)

    def comp_weights(self, kappa):
        C = _mark_loadings(kappa, self.nu, self.grid, self.kappa0, self.kappa_max)
        total = C.sum(axis=-1, keepdims=True)
        return np.divide(C, total, out=np.full_like(C, 1.0 / self.grid.L), where=total > 0)

    def comp_pdf(self, x, kappa):
        return np.exp(log_erlang_pdf(x[:, None], self._l, 1.0 / self.grid.theta))

    def comp_sf(self, x, kappa):
        return np.atleast_2d(erlang_sf(x[:, None], self._l, 1.0 / self.grid.theta))

    def comp_isf(self, s, kappa, comp):
        return special.gammainccinv(self._l[comp], s) * self.grid.theta

    def tail_probability(self, x, kappa):
        return self.sf(x, kappa)
