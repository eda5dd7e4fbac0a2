"""
Checking the formulas by simulation
===================================

Every closed-form delay has a Monte Carlo twin.  Runs are keyed by seed, so
repeating one reproduces it bit for bit.
"""

from layerdelay import Scenario, SimulationPlan, expected_delay, simulate

cases = [
    Scenario.build("IIR", k_s=10, k_p=5, eps_s=0.2, users=20),
    Scenario.build("FR", k_s=10, k_p=5, eps_s=0.2, users=20, n_s=14),
    Scenario.build("FIR", k_s=10, k_p=5, eps_s=0.2, n_s=14),
]
for sc in cases:
    analytic = expected_delay(sc).mean_slots
    sim = simulate(SimulationPlan(sc, 50_000, seed=7))
    z = (sim.mean_slots - analytic) / sim.std_err
    print(f"{sc.scheme.value:3s}  analytic {analytic:9.3f}  simulated {sim.mean_slots:9.3f} "
          f"+- {sim.std_err:.3f}  (z = {z:+.2f})")

again = simulate(SimulationPlan(cases[0], 50_000, seed=7))
print("same seed, same answer:", again == simulate(SimulationPlan(cases[0], 50_000, seed=7)))
