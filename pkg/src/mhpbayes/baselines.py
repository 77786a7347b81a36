"""ETAS model and its semiparametric scale-uniform-mixture variant.

Both share ``alpha(kappa) = a exp{b (kappa - kappa0)}``; they differ only in
the (mark-independent) offspring density.  The simulation truths with
mark-dependent Lomax offspring densities also live here since they reuse the
ETAS productivity law.
"""

from dataclasses import dataclass, field

import numpy as np

from .excitation import MixtureExcitation
from .kernels import lomax_pdf, lomax_sf


@dataclass
class EtasState:
    mu: float
    a: float
    b: float
    psi: float
    p: float
    c: float

    def is_stable(self):
        return self.psi > self.b and self.a * self.psi / (self.psi - self.b) < 1.0


@dataclass
class SemiparState:
    mu: float
    a: float
    b: float
    psi: float
    atoms: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    alpha0: float = 20.0
    a0: float = 1.0
    b0: float = 1.0 / 1.5

    def is_stable(self):
        return self.psi > self.b and self.a * self.psi / (self.psi - self.b) < 1.0


# ---------------------------------------------------------------------------
# Offspring-density kernels
# ---------------------------------------------------------------------------


class LomaxKernel:
    """Mixture of Lomax densities with shapes/scales linear in the parent mark.

    Component ``c`` has shape ``shape0[c] + shape_slope[c] * kappa`` and scale
    ``scale0[c] + scale_slope[c] * kappa``.
    """

    def __init__(self, weights, shape0, scale0, shape_slope=None, scale_slope=None):
        self.weights = np.atleast_1d(np.asarray(weights, float))
        self.weights = self.weights / self.weights.sum()
        self.shape0 = np.atleast_1d(np.asarray(shape0, float))
        self.scale0 = np.atleast_1d(np.asarray(scale0, float))
        C = self.weights.size
        self.shape_slope = np.zeros(C) if shape_slope is None else np.atleast_1d(np.asarray(shape_slope, float))
        self.scale_slope = np.zeros(C) if scale_slope is None else np.atleast_1d(np.asarray(scale_slope, float))

    @classmethod
    def lomax(cls, p, c):
        return cls([1.0], [p], [c])

    @classmethod
    def mark_shape(cls, offset=5.0, scale=1.0):
        """``Lomax(offset + kappa, scale)``."""
        return cls([1.0], [offset], [scale], shape_slope=[1.0])

    @classmethod
    def mark_mixture(cls):
        """``0.6 Lomax(10 + kappa, 1) + 0.4 Lomax(10, 1 + kappa)``."""
        return cls([0.6, 0.4], [10.0, 10.0], [1.0, 1.0], shape_slope=[1.0, 0.0], scale_slope=[0.0, 1.0])

    @property
    def mark_dependent(self):
        return bool(np.any(self.shape_slope) or np.any(self.scale_slope))

    def _params(self, kappa):
        kappa = np.asarray(kappa, float)[:, None]
        return self.shape0 + self.shape_slope * kappa, self.scale0 + self.scale_slope * kappa

    def comp_weights(self, kappa):
        return np.broadcast_to(self.weights, (np.size(kappa), self.weights.size))

    def comp_pdf(self, x, kappa):
        p, c = self._params(kappa)
        return lomax_pdf(x[:, None], p, c)

    def comp_sf(self, x, kappa):
        p, c = self._params(kappa)
        return lomax_sf(x[:, None], p, c)

    def comp_isf(self, s, kappa, comp):
        p, c = self._params(kappa)
        rows = np.arange(p.shape[0])
        p, c = p[rows, comp], c[rows, comp]
        return c * np.expm1(-np.log(s) / p)


class ScaleUniformKernel:
    """Non-increasing density ``sum_k pi_k / theta_k 1[x < theta_k]``."""

    def __init__(self, atoms, weights):
        self.atoms = np.asarray(atoms, float)
        self.weights = np.asarray(weights, float)
        if np.any(self.atoms <= 0):
            raise ValueError("atoms must be positive")

    mark_dependent = False

    def comp_weights(self, kappa):
        return np.broadcast_to(self.weights, (np.size(kappa), self.weights.size))

    def comp_pdf(self, x, kappa):
        x = np.asarray(x, float)[:, None]
        return np.where((x >= 0) & (x < self.atoms), 1.0 / self.atoms, 0.0)

    def comp_sf(self, x, kappa):
        x = np.asarray(x, float)[:, None]
        return np.clip(1.0 - x / self.atoms, 0.0, 1.0)

    def comp_isf(self, s, kappa, comp):
        return (1.0 - s) * self.atoms[comp]


class EtasExcitation(MixtureExcitation):
    """``h(x, kappa) = a exp{b (kappa - kappa0)} g_kappa(x)`` for a given kernel."""

    def __init__(self, a, b, kappa0, kernel):
        self.a, self.b, self.kappa0 = float(a), float(b), float(kappa0)
        self.kernel = kernel

    def alpha(self, kappa):
        return self.a * np.exp(self.b * (np.atleast_1d(np.asarray(kappa, float)) - self.kappa0))

    def comp_weights(self, kappa):
        return self.kernel.comp_weights(kappa)

    def comp_pdf(self, x, kappa):
        return self.kernel.comp_pdf(x, kappa)

    def comp_sf(self, x, kappa):
        return self.kernel.comp_sf(x, kappa)

    def comp_isf(self, s, kappa, comp):
        return self.kernel.comp_isf(s, kappa, comp)


# ---------------------------------------------------------------------------
# Scalar functionals
# ---------------------------------------------------------------------------


def etas_excitation(x, kappa, state, kappa0):
    return state.a * np.exp(state.b * (np.asarray(kappa, float) - kappa0)) * lomax_pdf(x, state.p, state.c)


def etas_rho(state, kappa0, kappa_max=np.inf, truncated=False):
    """Branching ratio of the ETAS productivity law under exponential marks.

    ``truncated=True`` integrates against the exponential mark density
    truncated to ``(kappa0, kappa_max)``.
    """
    a, b, psi = state.a, state.b, state.psi
    if psi <= b:
        raise ValueError("branching ratio requires psi > b")
    base = a * psi / (psi - b)
    if not truncated or np.isinf(kappa_max):
        return float(base)
    span = kappa_max - kappa0
    return float(base * np.expm1(-(psi - b) * span) / np.expm1(-psi * span))


def semipar_offspring_density(x, state):
    """Scale-uniform mixture density at lags ``x``."""
    x = np.atleast_1d(np.asarray(x, float))
    kern = ScaleUniformKernel(state.atoms, state.weights)
    out = np.sum(kern.comp_weights(x) * kern.comp_pdf(x, x), axis=-1)
    return out


def scale_uniform_cdf(x, atoms, weights):
    x = np.asarray(x, float)[..., None]
    return np.sum(weights * np.minimum(x, atoms) / atoms, axis=-1)
