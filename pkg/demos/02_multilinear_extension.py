"""
The multilinear extension: closed form versus sampling
======================================================

Buying each slot independently with probability x_s gives an expected
influence F(x). For coverage-type influence this has a closed form; a Monte
Carlo estimate should agree with it within a few standard errors.
"""
import numpy as np

from billboard_slots import F_exact, F_mc, InfluenceMatrix, product_influence

rng = np.random.default_rng(7)

# A random 6-slot, 8-user instance with two products.
users = [f"u{i}" for i in range(8)]
entries = {s: {u: float(rng.uniform(0.1, 0.9)) for u in users if rng.random() < 0.4} for s in range(6)}
affinities = {u: {"tea"} if i % 2 else {"tea", "bikes"} for i, u in enumerate(users)}
M = InfluenceMatrix.from_entries(6, entries, affinities, products=["tea", "bikes"])

# At the corners of the cube F agrees with the set function.
corner = np.array([1, 0, 1, 0, 0, 1.0])
print("F(corner)      =", F_exact(M, corner, "tea"))
print("I_tea({0,2,5}) =", product_influence(M, [0, 2, 5], "tea"))

# Inside the cube, compare with sampling for a growing number of samples.
x = rng.random(6)
exact = F_exact(M, x, "tea")
print(f"\nx = {np.round(x, 2)}\nexact F(x) = {exact:.5f}")
for n in (100, 1_000, 10_000, 100_000):
    est, err = F_mc(M, x, "tea", samples=n, seed=1)
    print(f"  {n:>7} samples: {est:.5f} +/- {err:.5f}   ({abs(est - exact) / err:.1f} stderr off)")
