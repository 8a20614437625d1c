"""
Heavy tails of the Manneville-Pomeau map
========================================

x -> x + x^(1 + alpha) mod 1 has an indifferent fixed point at 0: orbits
that come close linger there, producing runs of the symbol 0 whose lengths
have a power-law tail with exponent 1/alpha.  Consequently the q-th moment
of the time to reach the right branch is infinite once q is large enough,
and the running empirical moment keeps growing as the sample doubles.
"""

import numpy as np

from hitspec import MPParams, mp_divergence_check, mp_sojourn_lengths
from hitspec.estimators import hill_exponent

p = MPParams(alpha=0.5)
runs = mp_sojourn_lengths(p, 2 * 10**6, seed=3)
print(f"{runs.size} sojourns in the left branch, longest {runs.max()}")
print(f"Hill tail exponent: {hill_exponent(runs):.3f}   (1/alpha = {1 / p.alpha})")

# empirical tail on a log scale
for L in (1, 10, 100, 1000, 10000):
    print(f"  P(run > {L:5d}) = {np.mean(runs > L):.2e}")

for q in (1.0, 2.5):
    rep = mp_divergence_check(p, q, doublings=4, budget=2 * 10**6, seed=3, replicates=4)
    print(f"\nq = {q}: running moment over doubling sample sizes")
    for size, mom, g in rep.rows():
        print(f"  N = {size:8d}   E[tau^q] = {mom:12.4g}   growth = {g:.3f}")
