"""
Coding rate for a single receiver
=================================

A chunk of ``k_p`` packets, each of ``k_s`` symbols, crosses a channel that
erases every symbol independently with probability ``eps_s``.  We compare
the three physical-layer strategies as the coded block length ``n_s`` grows.
"""

from layerdelay import Scenario, expected_delay, optimize_ns
from layerdelay.schemes import Scheme

k_s, k_p, eps = 100, 100, 0.1

# the rateless baseline needs k_p * k_s / (1 - eps) slots on average
iir = expected_delay(Scenario.build("IIR", k_s=k_s, k_p=k_p, eps_s=eps)).mean_slots
print(f"IIR: {iir:.2f} slots")

# fixed redundancy pays for every symbol of every packet, lost or not
for n_s in (100, 110, 120, 150, 200):
    fr = expected_delay(Scenario.build("FR", k_s=k_s, k_p=k_p, eps_s=eps, n_s=n_s)).mean_slots
    fir = expected_delay(Scenario.build("FIR", k_s=k_s, k_p=k_p, eps_s=eps, n_s=n_s)).mean_slots
    print(f"n_s={n_s:4d}  FR {fr:12.2f}  FIR {fir:10.2f}")

# FR has a sweet spot, FIR just keeps improving toward IIR
best = optimize_ns(Scheme.FR, k_s, k_p, eps)
print(f"best FR block: n_s={best.best_ns}, {best.best_delay.mean_slots:.2f} slots "
      f"({best.best_delay.mean_slots / iir - 1:.1%} above IIR)")
