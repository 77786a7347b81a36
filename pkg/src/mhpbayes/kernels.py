"""Densities, distribution functions and seeded samplers shared by all models.

Every density has a ``log_`` twin; downstream code accumulates products of
densities in log space.  The Erlang CDF uses the finite Poisson-sum form of
the regularized incomplete gamma function, which is exact for the integer
shapes used throughout the package.
"""

import numpy as np
from scipy import special

__all__ = [
    "seeded_rng",
    "erlang_pdf",
    "log_erlang_pdf",
    "erlang_cdf",
    "erlang_sf",
    "lomax_pdf",
    "log_lomax_pdf",
    "lomax_cdf",
    "lomax_sf",
    "trunc_exp_pdf",
    "log_trunc_exp_pdf",
    "sample_gamma",
    "sample_log_gamma",
    "sample_beta",
    "sample_truncated_gamma",
    "sample_discrete",
    "sample_lognormal_step",
    "sample_poisson",
    "gumbel_argmax",
]


def seeded_rng(seed, stream=0):
    """Return an independent generator for the ``(seed, stream)`` pair.

    Streams come from :class:`numpy.random.SeedSequence` spawn keys, so chains
    and predictive replicates can be handed disjoint streams deterministically.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(seq))


# ---------------------------------------------------------------------------
# Erlang
# ---------------------------------------------------------------------------


def log_erlang_pdf(x, l, rate):
    x = np.asarray(x, dtype=float)
    l = np.asarray(l)
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = l * np.log(rate) + (l - 1) * np.log(x) - rate * x - special.gammaln(l)
    # x**0 with x == 0 is 1 for the exponential component
    out = np.where((x == 0) & (l == 1), np.log(rate) + 0.0 * x, out)
    out = np.where(x < 0, -np.inf, out)
    return out


def erlang_pdf(x, l, rate):
    """Erlang density with integer shape ``l`` and rate ``rate``."""
    return np.exp(log_erlang_pdf(x, l, rate))


def _poisson_terms_below(z, l):
    """Return sum_{k<l} e^{-z} z^k / k! (the Erlang survival function)."""
    lmax = int(np.max(l)) if np.size(l) else 0
    total = np.zeros(np.broadcast(z, l).shape)
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    for k in range(lmax):
        with np.errstate(invalid="ignore"):
            term = np.exp(k * logz - z - special.gammaln(k + 1.0))
        if k == 0:
            term = np.exp(-z) * np.ones_like(term)
        total = total + np.where(k < l, term, 0.0)
    return total


def _poisson_terms_from(z, l, max_terms=5000):
    """Return sum_{k>=l} e^{-z} z^k / k! by forward summation (z < l only)."""
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    k = np.array(l, dtype=float)
    with np.errstate(invalid="ignore"):
        term = np.exp(k * logz - z - special.gammaln(k + 1.0))
    term = np.where(z == 0, 0.0, term)
    total = term.copy()
    for _ in range(max_terms):
        k = k + 1.0
        term = term * z / k
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return total


def erlang_cdf(x, l, rate):
    """Regularized lower incomplete gamma ``P(l, rate * x)`` for integer ``l``.

    The finite sum ``1 - e^{-z} sum_{k<l} z^k/k!`` is used where ``z >= l``;
    below the mode the complementary series is summed directly so small
    probabilities keep full relative precision.
    """
    x = np.asarray(x, dtype=float)
    l = np.asarray(l)
    z = np.maximum(np.asarray(rate, dtype=float) * x, 0.0)
    z, l = np.broadcast_arrays(z, l)
    out = np.empty(z.shape)
    upper = z >= l
    if np.any(upper):
        out[upper] = 1.0 - _poisson_terms_below(z[upper], l[upper])
    if np.any(~upper):
        out[~upper] = _poisson_terms_from(z[~upper], l[~upper])
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def erlang_sf(x, l, rate):
    """Erlang survival function ``1 - erlang_cdf``."""
    x = np.asarray(x, dtype=float)
    l = np.asarray(l)
    z = np.maximum(np.asarray(rate, dtype=float) * x, 0.0)
    z, l = np.broadcast_arrays(z, l)
    out = np.empty(z.shape)
    upper = z >= l
    if np.any(upper):
        out[upper] = _poisson_terms_below(z[upper], l[upper])
    if np.any(~upper):
        out[~upper] = 1.0 - _poisson_terms_from(z[~upper], l[~upper])
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Lomax and truncated exponential
# ---------------------------------------------------------------------------


def log_lomax_pdf(x, p, c):
    x = np.asarray(x, dtype=float)
    return np.log(p) + p * np.log(c) - (p + 1.0) * np.log(c + x)


def lomax_pdf(x, p, c):
    """Lomax density ``p c^p / (c + x)^(p + 1)`` on x >= 0."""
    return np.exp(log_lomax_pdf(x, p, c))


def lomax_sf(x, p, c):
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return np.exp(p * (np.log(c) - np.log(c + x)))


def lomax_cdf(x, p, c):
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return -np.expm1(p * (np.log(c) - np.log(c + x)))


def log_trunc_exp_pdf(kappa, psi, kappa0, kappa_max):
    kappa = np.asarray(kappa, dtype=float)
    # The density extends continuously to the closed interval; only marks
    # strictly outside it are rejected.
    if np.any((kappa < kappa0) | (kappa > kappa_max)) or np.any(np.isnan(kappa)):
        raise ValueError("mark outside the support [kappa0, kappa_max]")
    # psi * e^{-psi (k - k0)} / (1 - e^{-psi (kmax - k0)})
    if np.isinf(kappa_max):
        log_norm = 0.0
    else:
        log_norm = np.log(-np.expm1(-psi * (kappa_max - kappa0)))
    return np.log(psi) - psi * (kappa - kappa0) - log_norm


def trunc_exp_pdf(kappa, psi, kappa0, kappa_max):
    """Exponential density with rate ``psi`` truncated to ``(kappa0, kappa_max)``."""
    return np.exp(log_trunc_exp_pdf(kappa, psi, kappa0, kappa_max))


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_gamma(rng, shape, rate, size=None):
    """Gamma draws parameterized by shape and rate (mean shape / rate)."""
    return rng.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_log_gamma(rng, shape, rate, size=None):
    """Log of a Gamma(shape, rate) draw, safe for shapes far below one.

    Uses ``G(a) = G(a + 1) U^{1/a}`` so the result stays finite even when the
    draw itself underflows to zero.
    """
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if size is None:
        size = np.broadcast(shape, rate).shape
    g = rng.gamma(shape + 1.0, 1.0, size=size)
    u = rng.random(size=size)
    return np.log(g) + np.log1p(-u) / shape - np.log(rate)


def sample_beta(rng, a, b, size=None):
    return rng.beta(a, b, size=size)


def sample_truncated_gamma(rng, shape, rate, lower=0.0, upper=np.inf):
    """One Gamma(shape, rate) draw restricted to ``(lower, upper)``.

    Inverse CDF on the restricted range; the tail side is inverted through
    the survival function when the interval sits in the upper tail.  Falls
    back to rejection sampling when the interval mass is below 1e-12.
    """
    if not lower < upper:
        raise ValueError("empty truncation interval")
    zl, zu = rate * lower, rate * upper
    cl, cu = special.gammainc(shape, zl), special.gammainc(shape, zu)
    sl, su = special.gammaincc(shape, zl), special.gammaincc(shape, zu)
    if cu - cl >= 1e-12 and cl < 0.5:
        q = cl + rng.random() * (cu - cl)
        z = special.gammaincinv(shape, q)
    elif sl - su >= 1e-12:
        q = su + rng.random() * (sl - su)
        z = special.gammainccinv(shape, q)
    else:
        return _truncated_gamma_rejection(rng, shape, rate, lower, upper)
    return float(np.clip(z / rate, lower, upper))


def _truncated_gamma_rejection(rng, shape, rate, lower, upper, max_tries=100000):
    # Exponential-proposal rejection for far-tail intervals above the mode,
    # uniform-proposal rejection for narrow intervals otherwise.
    mode = max(shape - 1.0, 0.0) / rate
    if lower >= mode and np.isinf(upper):
        lam = rate - max(shape - 1.0, 0.0) / lower if lower > 0 else rate
        lam = max(lam, 1e-12)
        for _ in range(max_tries):
            x = lower + rng.exponential(1.0 / lam)
            log_acc = (shape - 1.0) * np.log(x / lower) - (rate - lam) * (x - lower)
            if np.log(rng.random()) < log_acc:
                return float(x)
    else:
        hi = upper if np.isfinite(upper) else lower + 50.0 / rate
        grid = np.linspace(lower, hi, 257)[1:-1]
        with np.errstate(divide="ignore"):
            logf = (shape - 1.0) * np.log(grid) - rate * grid
        top = np.max(logf) + 1.0
        for _ in range(max_tries):
            x = rng.uniform(lower, hi)
            if np.log(rng.random()) < (shape - 1.0) * np.log(x) - rate * x - top:
                return float(x)
    raise RuntimeError("truncated gamma rejection sampler did not terminate")


def sample_discrete(rng, weights):
    """Index ``i`` with probability ``weights[i] / sum(weights)``."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.isfinite(w).all():
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("all-zero weight vector")
    idx = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
    return min(idx, len(w) - 1)


def gumbel_argmax(rng, log_weights, groups=None, n_groups=None):
    """Categorical draws from log weights via the Gumbel-max trick.

    With ``groups`` (sorted group ids, one per entry) returns, for every group,
    the position of the winning entry.  Entries with ``-inf`` never win.
    """
    logw = np.asarray(log_weights, dtype=float)
    key = logw + rng.gumbel(size=logw.shape)
    if groups is None:
        return int(np.argmax(key))
    groups = np.asarray(groups)
    if n_groups is None:
        n_groups = int(groups[-1]) + 1 if groups.size else 0
    best = np.full(n_groups, -np.inf)
    np.maximum.at(best, groups, key)
    win = np.flatnonzero(key == best[groups])
    # ties have probability zero; keep the first winner per group
    first = np.full(n_groups, -1)
    first[groups[win[::-1]]] = win[::-1]
    return first


def sample_lognormal_step(rng, current, scale):
    """Log-normal random-walk proposal ``current * exp(scale * N(0, 1))``."""
    return current * np.exp(scale * rng.standard_normal())


def sample_poisson(rng, mean, size=None):
    return rng.poisson(mean, size=size)
