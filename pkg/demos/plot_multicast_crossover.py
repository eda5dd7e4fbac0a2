"""
When fixed redundancy wins
==========================

With many receivers, IIR must keep sending each packet until the slowest
user has it, while FR lets users recover different lost packets from the
same rateless packet stream.  Past some audience size FR becomes faster.
"""

from layerdelay import compare_multicast, find_crossover_users

grid = (1, 10, 100, 1000, 2000, 5000, 10000)
for eps in (0.1, 0.3, 0.5):
    print(f"eps_s = {eps}")
    for point in compare_multicast(100, 100, eps, grid):
        marker = "FR" if point.fr_wins else "IIR"
        print(f"  u={point.users:6d}  IIR {point.iir.mean_slots:10.1f}  FR {point.fr.mean_slots:10.1f} "
              f"(n_s={point.fr_ns})  -> {marker}")
    print("  crossover:", find_crossover_users(100, 100, eps, u_max=grid[-1], grid=grid))
