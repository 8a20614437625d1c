"""
Recurrence spectra of a Markov source
=====================================

How fast do moments of hitting times grow with the word length?  For a
Markov measure the answer is a pressure: the n-th root of E[w_n^q] behaves
like exp(W(q)), with W equal to the Renyi function M for q >= -1 and frozen
at P(2 phi) below.  This script puts the exact curve next to a Monte Carlo
estimate.
"""

import numpy as np

from hitspec import EstimationPlan, MarkovSpec, SourceSpec, spectrum_estimate_W
from hitspec import thermo

# a sticky two-state chain: long runs of either symbol
m = MarkovSpec(np.array([[0.85, 0.15], [0.3, 0.7]]), order=1)
print("entropy h       =", round(thermo.entropy(m), 6))
print("variance sigma2 =", round(thermo.asymptotic_variance(m), 6))
print("P(2 phi)        =", round(thermo.pressure_2phi(m), 6))

# below q = -1 the spectrum is flat: the leading contribution to E[w^q]
# comes from the event w = 1, of probability sum mu([a])^2 = exp(n P(2 phi))
qs = np.array([-3, -2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
exact = [thermo.hitting_spectrum_W(m, q) for q in qs]

# the estimate is the slope of n W_n(q) over a few word lengths; small n keep
# the rare events that dominate negative moments well represented
plan = EstimationPlan(SourceSpec(m, seed=2024), n_grid=(4, 6, 8), q_grid=tuple(qs),
                      n_samples=5000, budget=10**6)
est = spectrum_estimate_W(plan)

print("\n   q     W(q) exact   W(q) estimate   stderr")
for q, e, v, s in zip(qs, exact, est.values, est.stderr):
    print(f"{q:5.1f}   {e:10.4f}   {v:12.4f}   {s:8.4f}")

# the kink at q = -1: slope 0 on the left, -int phi d mu_{2 phi} on the right
print("\nright slope of W at -1 :", round(thermo.twisted_slope(m), 6))

# the Legendre transform of W gives the large-deviation rate of (1/n) log w_n
u = np.linspace(0, 0.3, 7)
rate = thermo.rate_function(m, "above", u)
print("\nrate of (1/n) log w_n > h + u")
for uu, r in zip(u, rate.rate):
    print(f"  u = {uu:.2f}   I(u) = {r:.5f}")
