"""Reference allocators: uniformly random slots, and highest singleton influence first."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .disjoint import AllocationOutcome, _demand_met
from .influence import Coverage, InfluenceMatrix, singleton_influence
from .model import CostTable, ProductSpec


def _allocate(matrix, costs, products, order_for):
    """Shared loop: each product scans ``order_for(taken)`` and keeps affordable slots."""
    w = costs.cost
    taken = np.zeros(matrix.n_slots, dtype=bool)
    sets, residual, attained = {}, {}, {}
    for p in products:
        cov = Coverage(matrix, matrix.product_weights(p.product_id))
        v = float(p.budget)
        for s in order_for(taken):
            if v <= 0 or _demand_met(cov.value(), p.demand):
                break
            if w[s] <= v:
                cov.add(int(s))
                taken[s] = True
                v -= w[s]
        sets[p.product_id] = frozenset(cov.members)
        residual[p.product_id] = v
        attained[p.product_id] = cov.value()
    demands = {p.product_id: p.demand for p in products}
    feasible = all(_demand_met(attained[j], d) for j, d in demands.items())
    return AllocationOutcome(sets, feasible, float(w[taken].sum()), residual, attained, demands)


def random_allocation(matrix: InfluenceMatrix, costs: CostTable, products: Sequence[ProductSpec],
                      seed=None) -> AllocationOutcome:
    """Products in input order draw free slots uniformly at random, skipping unaffordable draws."""
    rng = np.random.default_rng(seed)

    def order(taken):
        return rng.permutation(np.flatnonzero(~taken))

    return _allocate(matrix, costs, products, order)


def topk_allocation(matrix: InfluenceMatrix, costs: CostTable, products: Sequence[ProductSpec]) -> AllocationOutcome:
    """Products in input order take free slots by descending singleton influence (ties: lower id)."""
    ranked = np.argsort(-singleton_influence(matrix), kind="stable")

    def order(taken):
        return ranked[~taken[ranked]]

    return _allocate(matrix, costs, products, order)
