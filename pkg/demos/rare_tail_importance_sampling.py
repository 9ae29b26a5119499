"""Estimating far-tail Type-I error with importance sampling.

Checking that a test holds its size at alpha = 1e-5 by naive
simulation needs ~1e7 draws for a usable estimate.  The importance
sampler shifts the simulated errors along the genotype direction so
draws land near the rejection boundary, then reweights by the exact
null-to-proposal density ratio; a defensive mixture (+shift, -shift,
and 10% unshifted null) caps the weights and keeps the estimator
stable.  Run as: python demos/rare_tail_importance_sampling.py
"""

import logging
import sys

from acmescan import SimConfig, estimate_tail_type1

# route the library's degeneracy warnings to stdout so they appear in
# sequence with the tables below
logging.basicConfig(level=logging.WARNING, stream=sys.stdout,
                    format="warning: %(message)s")

config = SimConfig(n=105, p=10, maf=0.25, delta=0.0, seed=5)
alphas = (1e-3, 1e-5)
n_draws = 2500

print(f"{n_draws} draws per level at n={config.n}, p={config.p}, "
      f"normal errors\n")

# the shifted mixture proposal: one run per target level
results = estimate_tail_type1(config, alphas, proposal="auto", n_draws=n_draws)
print("importance sampling, auto-tuned shift:")
print("alpha     estimate    mc_se      est/alpha  n_effective")
for r in results:
    print(f"{r.alpha:8.0e}  {r.estimate:9.3e}  {r.mc_se:9.3e}  "
          f"{r.estimate / r.alpha:8.2f}   {r.n_effective:8.1f}"
          + ("  FLAGGED" if r.flagged else ""))
    # calibrated within Monte Carlo error at both levels
    assert abs(r.estimate - r.alpha) < 4 * r.mc_se + 0.2 * r.alpha

# the same budget spent on naive Monte Carlo: at 1e-5 the expected hit
# count is 0.025, so the estimate is pure noise and gets flagged
print("\nnaive Monte Carlo, same number of draws:")
naive = estimate_tail_type1(config, alphas, proposal="null", n_draws=n_draws)
print("alpha     estimate    mc_se      hits   flagged")
for r in naive:
    print(f"{r.alpha:8.0e}  {r.estimate:9.3e}  {r.mc_se:9.3e}  "
          f"{r.n_effective:5.0f}   {r.flagged}")

se_gain = naive[0].mc_se / results[0].mc_se
print(f"\nat alpha=1e-3 the importance sampler's standard error is "
      f"{se_gain:.1f}x smaller,")
print("equivalent to "
      f"{se_gain**2:.0f}x more naive draws at the same cost.")
