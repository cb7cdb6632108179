"""
Raising demand relative to supply
=================================

alpha is total demand divided by the total influence all slots could supply.
As it grows, fewer products can be served. This sweep runs every algorithm
over five alpha values on one synthetic city and writes a metrics CSV (plus a
gnuplot script for it) into the current directory.
"""
from collections import defaultdict

from billboard_slots import bench

base = bench.ExperimentConfig(beta=0.05, product_count=20, epsilon=0.1, lambda_m=100.0, seeds=(0,))
alphas = [0.4, 0.6, 0.8, 1.0, 1.2]
rows = bench.run_sweep(bench.expand_grid(base, alphas=alphas))

bench.write_metrics("alpha_sweep.csv", rows)
bench.write_gnuplot("alpha_sweep.gp", "alpha_sweep.csv")

table = defaultdict(dict)
for r in rows:
    table[r["algo"]][r["alpha"]] = r
print("satisfied products (of 20)")
print(f"{'algo':>16} " + " ".join(f"{a:>6}" for a in alphas))
for algo, cells in table.items():
    print(f"{algo:>16} " + " ".join(f"{cells[a]['satisfied']:>6}" for a in alphas))
print(f"\nslowest cell: {max(r['millis'] for r in rows) / 1000:.1f}s; wrote alpha_sweep.csv")
