"""How the gamma-process hyperparameters shape the prior on alpha(kappa).

Prior uncertainty about the productivity curve shrinks as the concentration
c0 grows and widens as the mark exponent d grows.  Monte Carlo bands are
printed next to the analytic prior mean.

    python3 demos/02_prior_check.py
"""

import numpy as np

from mhpbayes.analysis import prior_excitation_draws
from mhpbayes.excitation import BasisGrid, GammaProcessHyper, prior_alpha_moments
from mhpbayes.kernels import seeded_rng

kappa = np.array([4.5, 6.0, 8.0, 9.5])
kappa0, kappa_max = 4.0, 10.0

for c0, d in [(1.0, 1.0), (100.0, 1.0), (1.0, 3.0)]:
    grid = BasisGrid(10, 5, 0.1, d)
    hyper = GammaProcessHyper(c0, 0.7, 0.2)
    mean, var = prior_alpha_moments(kappa, grid, hyper, kappa0, kappa_max)
    draws = np.array([e.alpha(kappa) for e in
                      prior_excitation_draws(seeded_rng(0), 2000, grid, hyper, kappa0, kappa_max)])
    lo, hi = np.quantile(draws, [0.025, 0.975], axis=0)
    print(f"c0 = {c0:g}, d = {d:g}")
    for k, m, mc, l, h in zip(kappa, mean, draws.mean(0), lo, hi):
        print(f"  kappa {k:4.1f}  analytic mean {m:.3f}  MC mean {mc:.3f}  band [{l:.3f}, {h:.3f}]")
