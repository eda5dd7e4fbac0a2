"""
The slowest of u receivers
==========================

The multicast delay hinges on E[max] of u negative binomial draws.  The
exact tail sum is cheap, and two logarithmic approximations show how it grows.
"""

from layerdelay import (
    NegBinomialParams,
    approx_grabner,
    approx_improved,
    max_orderstat_mean_exact,
    simulate_max_orderstat,
)

eps = 0.1
for k in (1, 2, 4):
    for u in (10, 100, 1000):
        exact = max_orderstat_mean_exact(NegBinomialParams.from_erasure(k, eps), u)
        print(f"k={k} u={u:5d}  exact {exact:8.4f}  "
              f"grabner {approx_grabner(k, eps, u):8.4f}  improved {approx_improved(k, eps, u):8.4f}")

# a quick simulation agrees with the tail sum
sim = simulate_max_orderstat(4, 1 - eps, 100, 100_000, seed=1)
print(f"simulated k=4 u=100: {sim.mean_slots:.4f} +- {sim.std_err:.4f}")
