"""
Fluctuations of log w_n for long words
======================================

For n = 40 and a Bernoulli(0.9, 0.1) source a typical hitting time is about
exp(13), but rare words push it past exp(40), far beyond any stream one
could scan.  The exact sampler draws w_n from the first-passage law of the
pattern automaton instead, with a cost logarithmic in w_n.

We look at the central limit theorem for log w_n and the running maximum
of the normalized sequence along one coupled pair (x, y).
"""

import numpy as np

from hitspec import EstimationPlan, MarkovSpec, SourceSpec, clt_check, lil_trace
from hitspec import thermo

m = MarkovSpec.bernoulli([0.9, 0.1])
h, s2 = thermo.entropy(m), thermo.asymptotic_variance(m)
print(f"h = {h:.5f}, sigma^2 = {s2:.5f}")

plan = EstimationPlan(SourceSpec(m, seed=5), n_grid=(40,), q_grid=(0.0,), n_samples=2000,
                      budget=10**6, sampler="exact")
rep = clt_check(plan)
print(f"\nz = (log w_n - n h) / (sigma sqrt n), n = {rep.n}")
print(f"  mean z           = {rep.z.mean():+.4f}")
print(f"  var of (log w_n - n h)/sqrt n = {rep.var_scaled:.4f}  (sigma^2 = {s2:.4f})")
print(f"  KS distance to N(0,1) = {rep.ks:.4f}")

# the mean is shifted by about -0.577 / (sigma sqrt n): w_n mu([x_1^n]) is
# nearly exponential, and E log of an Exp(1) variable is minus Euler's constant
print(f"  -gamma/(sigma sqrt n)  = {-0.5772156649 / np.sqrt(s2 * rep.n):+.4f}")

# histogram of z in text form
edges = np.linspace(-3, 3, 13)
counts, _ = np.histogram(rep.z, edges)
for a, c in zip(edges[:-1], counts):
    print(f"  {a:+.1f} {'#' * int(60 * c / counts.max())}")

# one pair, n growing: (log w_n - n h) / sigma sqrt(2 n log log n)
trace = lil_trace(EstimationPlan(SourceSpec(m, seed=5), n_grid=(200,), q_grid=(0.0,),
                                 n_samples=100, budget=10**6, sampler="exact"))
print("\n   n    normalized   running max")
for n, v, r in list(zip(trace.n, trace.values, trace.running_max))[::23]:
    print(f"{n:4d}   {v:+9.4f}   {r:+9.4f}")
