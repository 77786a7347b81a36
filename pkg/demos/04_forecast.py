"""Posterior predictive forecast of the event count in a held-out window.

Fit on the first part of a simulated catalog, simulate continuations from
each posterior draw, and score the 95% interval against the observed count.

    python3 demos/04_forecast.py --iterations 1000
"""

import argparse

from mhpbayes.analysis import forecast_summary
from mhpbayes.catalog import split_at
from mhpbayes.sampler import ChainConfig, run_chain
from mhpbayes.sampler import priors as P
from mhpbayes.simulate import posterior_predictive_counts, scenario, simulate_mhp

parser = argparse.ArgumentParser()
parser.add_argument("--seed", type=int, default=2)
parser.add_argument("--iterations", type=int, default=1000)
args = parser.parse_args()

labeled, _ = simulate_mhp(scenario("mark-lomax", seed=args.seed, T=6000.0))
fit_part, test_part = split_at(labeled, 4000.0)
cfg = ChainConfig(iterations=args.iterations, burn_in=args.iterations // 2, thin=5, seed=args.seed,
                  L=10, M=5, priors=P.preset("s42")["priors"])

for model in ("etas", "nonpar"):
    chain = run_chain(model, fit_part.pattern, cfg)
    counts = posterior_predictive_counts(chain, fit_part.pattern, 6000.0, seed=args.seed)
    f = forecast_summary(counts, observed=test_part.pattern.n)
    print(f"{model:7s} observed {test_part.pattern.n}  95% interval {f.interval}  "
          f"interval score {f.interval_score:.1f}")
