"""Prior families and named prior presets.

A prior is a tuple ``(family, *params)``:

* ``("exp", rate)``
* ``("lomax", shape, scale)``
* ``("gamma", shape, rate)``
"""

import numpy as np
from scipy import special


def logpdf(prior, x):
    fam = prior[0]
    if x <= 0:
        return -np.inf
    if fam == "exp":
        rate = prior[1]
        return np.log(rate) - rate * x
    if fam == "lomax":
        shape, scale = prior[1], prior[2]
        return np.log(shape) + shape * np.log(scale) - (shape + 1.0) * np.log(scale + x)
    if fam == "gamma":
        shape, rate = prior[1], prior[2]
        return shape * np.log(rate) - special.gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x
    raise ValueError(f"unknown prior family {fam!r}")


def cdf(prior, x):
    fam = prior[0]
    x = np.maximum(np.asarray(x, float), 0.0)
    if fam == "exp":
        return -np.expm1(-prior[1] * x)
    if fam == "lomax":
        return -np.expm1(prior[1] * (np.log(prior[2]) - np.log(prior[2] + x)))
    if fam == "gamma":
        return special.gammainc(prior[1], prior[2] * x)
    raise ValueError(f"unknown prior family {fam!r}")


def sample(prior, rng):
    fam = prior[0]
    if fam == "exp":
        return rng.exponential(1.0 / prior[1])
    if fam == "lomax":
        u = rng.random()
        return prior[2] * np.expm1(-np.log1p(-u) / prior[1])
    if fam == "gamma":
        return rng.gamma(prior[1], 1.0 / prior[2])
    raise ValueError(f"unknown prior family {fam!r}")


def center(prior):
    """Initial value: prior mean, or the median for Lomax priors (mean may not exist)."""
    fam = prior[0]
    if fam == "exp":
        return 1.0 / prior[1]
    if fam == "lomax":
        return prior[2] * (2.0 ** (1.0 / prior[1]) - 1.0)
    if fam == "gamma":
        return prior[1] / prior[2]
    raise ValueError(f"unknown prior family {fam!r}")


_ETAS = {
    "a": ("exp", 2.0),
    "b": ("exp", 0.2),
    "psi": ("exp", 0.1),
    "p": ("exp", 0.005),
    "c": ("exp", 0.1),
    "alpha0": ("gamma", 5.0, 0.25),
    "a0": ("exp", 1.0),
    "b0": ("exp", 1.5),
}

_NONPAR_GENERAL = {
    "phi": ("lomax", 2.0, 600.0),
    "e0": ("exp", 0.1),
    "b_g0": ("exp", 0.007),
}


def _nonpar(theta_scale, b1_rate, b2_rate, bb_rate, mu_rate):
    return {
        "theta": ("lomax", 2.0, theta_scale),
        "d": ("exp", 1.0),
        "c0": ("lomax", 2.0, 2000.0),
        "b1": ("exp", b1_rate),
        "b2": ("exp", b2_rate),
        "a_beta": ("exp", 1.0),
        "b_beta": ("exp", bb_rate),
        "mu": ("exp", mu_rate),
    }


# Basis sizes travel with the presets because they were calibrated per data set.
PRESETS = {
    "s22": dict(priors={**_ETAS, **_nonpar(0.1, 10.0, 8.0, 0.204, 11.0)}, L=15, M=20,
                kappa0=4.0, kappa_max=10.0),
    "s42": dict(priors={**_ETAS, **_nonpar(0.1, 10.0, 10.0, 0.321, 22.3)}, L=20, M=15,
                kappa0=4.0, kappa_max=10.0),
    "s43": dict(priors={**_ETAS, **_nonpar(0.5, 10.0, 13.0, 0.334, 22.0)}, L=60, M=15,
                kappa0=4.0, kappa_max=10.0),
    "japan": dict(priors={**_ETAS, **_nonpar(9.0, 10.0, 60.0, 0.241, 139.0), **_NONPAR_GENERAL},
                  L=20, M=160, J=100, kappa0=6.0, kappa_max=8.6),
}


def preset(name):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    out = dict(PRESETS[name])
    out["priors"] = dict(out["priors"])
    return out
