"""The statistic's sampling distribution given the data is Poisson binomial.

For fixed acceptance probabilities the number of accepted draws is a sum of
independent Bernoullis. This script compares the exact pmf with direct
simulation of the accept-reject draws.
"""

import numpy as np

from artest import distributions as dist
from artest.ar_core import gof_statistic
from artest.mc_engine import simulate_T_distribution
from artest.poisson_binomial import PoiBinDist, credible_interval, poibin_pmf

x = np.random.default_rng(3).normal(size=30)
probs = gof_statistic(x, dist.mv_normal([0.0])).accept_probs

exact = poibin_pmf(probs)
simulated = simulate_T_distribution(probs, 10**4, seed=3)
print(f"total variation distance: {0.5 * np.abs(exact - simulated).sum():.4f}")

print(" k/n   exact   simulated")
for k in np.flatnonzero(exact > 0.01):
    print(f"{k / 30:5.3f}  {exact[k]:.4f}  {simulated[k]:.4f}")

lo, hi = credible_interval(PoiBinDist(probs), 0.95)
print(f"95% credible interval for T: [{lo:.3f}, {hi:.3f}]")
