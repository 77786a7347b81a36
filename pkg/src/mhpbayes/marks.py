"""Mark (magnitude) densities: rescaled beta and (truncated) exponential."""

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .kernels import log_trunc_exp_pdf


@dataclass(frozen=True)
class BetaMarks:
    """Beta density on ``u = (kappa - kappa0) / (kappa_max - kappa0)``."""

    a: float
    b: float
    kappa0: float
    kappa_max: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta shape parameters must be positive")
        if not np.isfinite(self.kappa_max) or self.kappa_max <= self.kappa0:
            raise ValueError("beta marks need a finite kappa_max > kappa0")

    @property
    def width(self):
        return self.kappa_max - self.kappa0

    def logpdf(self, kappa):
        u = (np.asarray(kappa, dtype=float) - self.kappa0) / self.width
        return stats.beta.logpdf(u, self.a, self.b) - np.log(self.width)

    def pdf(self, kappa):
        return np.exp(self.logpdf(kappa))

    def sample(self, rng, size):
        out = self.kappa0 + self.width * rng.beta(self.a, self.b, size=size)
        # keep rounding from landing a draw on either bound
        lo, hi = np.nextafter(self.kappa0, self.kappa_max), np.nextafter(self.kappa_max, self.kappa0)
        return np.clip(out, lo, hi)


@dataclass(frozen=True)
class TruncatedExponentialMarks:
    """Exponential marks with rate ``psi`` on ``(kappa0, kappa_max)``.

    ``kappa_max = inf`` gives the untruncated ETAS mark density.
    """

    psi: float
    kappa0: float
    kappa_max: float = np.inf

    def __post_init__(self):
        if self.psi <= 0:
            raise ValueError("psi must be positive")
        if self.kappa_max <= self.kappa0:
            raise ValueError("kappa_max must exceed kappa0")

    def logpdf(self, kappa):
        return log_trunc_exp_pdf(kappa, self.psi, self.kappa0, self.kappa_max)

    def pdf(self, kappa):
        return np.exp(self.logpdf(kappa))

    def sample(self, rng, size):
        u = rng.random(size=size)
        if np.isinf(self.kappa_max):
            return self.kappa0 - np.log1p(-u) / self.psi
        span = -np.expm1(-self.psi * (self.kappa_max - self.kappa0))
        out = self.kappa0 - np.log1p(-u * span) / self.psi
        return np.minimum(out, np.nextafter(self.kappa_max, self.kappa0))


def beta_function(a, b):
    return np.exp(special.betaln(a, b))
