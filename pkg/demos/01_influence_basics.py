"""
Influence of billboard slots on passers-by
==========================================

A handful of people walk past two billboards during one afternoon. We cut the
afternoon into hour-long slots, build the slot x user influence matrix, and
look at how influence adds up (with diminishing returns) as slots are bought.
"""
import numpy as np

from billboard_slots import (Billboard, SlotUniverse, TimeInterval, TrajectoryRecord, build_influence_matrix,
                             influence, marginal_gain, product_influence, sparsity)

# Two billboards a block apart in midtown, and a larger one uptown that sets
# the size scale (nobody in this walk passes it).
billboards = [Billboard("times-sq", (40.7580, -73.9855), 30.0),
              Billboard("bryant-pk", (40.7536, -73.9832), 20.0),
              Billboard("columbus", (40.7681, -73.9819), 40.0)]

t0 = 1_333_238_400  # 2012-04-01 00:00 UTC
hour = 3600
universe = SlotUniverse(billboards, (t0, t0 + 3 * hour), hour)
print("slots:", [(s.slot_id, s.billboard, s.interval.start - t0) for s in universe])

# Each record: who, where, when, and which products they care about.
walk = [
    ("ann", (40.7581, -73.9854), 0.2, {"shoes", "coffee"}),
    ("ann", (40.7537, -73.9833), 1.1, {"shoes", "coffee"}),
    ("bob", (40.7579, -73.9856), 0.5, {"coffee"}),
    ("cat", (40.7535, -73.9831), 2.4, {"shoes"}),
    ("dan", (40.7700, -73.9700), 1.0, {"shoes"}),  # far from both boards
]
records = [TrajectoryRecord(u, loc, TimeInterval(int(t0 + h * hour), int(t0 + h * hour) + 600), frozenset(a))
           for u, loc, h, a in walk]

# A person within 100 m of a billboard during a slot is influenced with
# probability size / largest size.
M = build_influence_matrix(records, universe, lambda_m=100.0)
print("\ninfluence matrix (rows = slots, cols =", M.users, ")")
print(np.round(M.P.toarray(), 2))
print("sparsity (most products any slot touches):", sparsity(M))

# Buying both of ann's slots does not double her influence.
S = [0, 4]  # times-sq hour 0, bryant-pk hour 1
print("\nI({0}) =", influence(M, [0]), " I({4}) =", influence(M, [4]), " I({0, 4}) =", influence(M, S))

for product in M.products:
    print(f"I_{product}({S}) = {product_influence(M, S, product):.3f}")

# Marginal gains shrink as the base set grows.
print("\ngain of slot 4 for shoes, given {}  :", marginal_gain(M, [], 4, "shoes"))
print("gain of slot 4 for shoes, given {0} :", marginal_gain(M, [0], 4, "shoes"))
