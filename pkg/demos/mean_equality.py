"""Equality of means for three correlated measurements.

Compares the accept-reject test (normal density over a t proposal for the
standardised contrasts) with a pairwise breakdown.
"""

import numpy as np

from artest.mc_engine import ar_mean_equality_test, pairwise_mean_tests

rng = np.random.default_rng(11)
cov = np.array([[1.0, 0.6, 0.3], [0.6, 1.0, 0.6], [0.3, 0.6, 1.0]])
x = rng.multivariate_normal([0.0, 0.0, 0.35], cov, size=40)

rep = ar_mean_equality_test(x, M=999, seed=0)
print(f"joint test: T = {rep.statistic:.3f}  p = {rep.p_value:.3f}  CI = [{rep.ci[0]:.3f}, {rep.ci[1]:.3f}]")

for row in pairwise_mean_tests(x, ["a", "b", "c"], M=499, seed=0):
    print(f"  {row.first} vs {row.second}: diff = {row.mean_difference:+.3f}  p = {row.p_value:.3f}")
