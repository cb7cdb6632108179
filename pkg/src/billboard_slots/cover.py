"""Bi-criteria multi-product cover: one common slot set meeting every product's threshold.

Pipeline: normalize each product's influence by its ground-set value, run
continuous greedy on the sum of the normalized functions, round the fractional
point ``ceil(log_{1/(1-eps)} r)`` times and take the union, then greedily
repair any product left below ``(1 - 1/e - 2 eps)`` of its threshold.
"""
from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .continuous_greedy import Polytope, continuous_greedy
from .influence import Coverage, InfluenceMatrix, product_influence, sparsity
from .instance import Instance
from .model import InfeasibleError, ProductSpec, ValidationError
from .multilinear import aggregate_weights, product_scales

log = logging.getLogger(__name__)

ONE_MINUS_INV_E = 1.0 - 1.0 / math.e


@dataclass(frozen=True)
class BicriteriaConfig:
    epsilon: float = 0.1
    seed: int | None = 0
    T: float = 1.0
    step: float | None = None
    polytope: str = "knapsack"
    budget: float | None = None  # fixed knapsack budget / cardinality cap; None = doubling search

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValidationError("epsilon must lie in (0, 1)")
        if self.polytope not in ("knapsack", "cardinality"):
            raise ValidationError(f"unknown polytope {self.polytope!r}")


@dataclass
class CoverSolution:
    slots: frozenset[int]
    cost: float
    attained: dict[str, float]
    thresholds: dict[str, float]
    satisfied: dict[str, bool]
    rounds_used: int
    repaired_products: set[str] = field(default_factory=set)
    budget_used: float | None = None
    fractional: np.ndarray | None = None

    @property
    def n_satisfied(self) -> int:
        return sum(self.satisfied.values())

    def dump(self, path, slots_path=None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("product_id", "threshold", "attained", "satisfied"))
            for p, a in self.attained.items():
                w.writerow((p, repr(self.thresholds[p]), repr(a), int(self.satisfied[p])))
        if slots_path is not None:
            with open(slots_path, "w", encoding="utf-8") as fh:
                fh.write("slot_id\n")
                fh.writelines(f"{s}\n" for s in sorted(self.slots))


def normalize(matrix: InfluenceMatrix, products: Sequence[ProductSpec]) -> tuple[dict[str, float], dict[str, float]]:
    """Per-product scales ``I_j(BS)`` and thresholds divided by them (capped at 1)."""
    scales = product_scales(matrix, [p.product_id for p in products])
    normalized = {}
    for p in products:
        scale = scales[p.product_id]
        if p.threshold <= 0:
            normalized[p.product_id] = 0.0
            continue
        if scale <= 0:
            raise InfeasibleError(f"product {p.product_id} has no reachable users but threshold {p.threshold}")
        t = p.threshold / scale
        if t > 1:
            log.warning("product %s: threshold %.4g exceeds supply %.4g; capping", p.product_id, p.threshold, scale)
            t = 1.0
        normalized[p.product_id] = t
    return scales, normalized


def rounding_rounds(epsilon: float, r: int) -> int:
    """``ceil(log_{1/(1-eps)} r)``, at least 1."""
    if r <= 1:
        return 1
    return max(1, math.ceil(math.log(r) / math.log(1.0 / (1.0 - epsilon)) - 1e-12))


def round_and_union(x: np.ndarray, epsilon: float, r: int, seed=None) -> tuple[set[int], int]:
    """Union of independent inclusion samples of ``x``; returns (slots, rounds)."""
    rng = np.random.default_rng(seed)
    rounds = rounding_rounds(epsilon, r)
    x = np.asarray(x, dtype=float)
    picked = (rng.random((rounds, len(x))) < x).any(axis=0)
    return set(np.flatnonzero(picked).tolist()), rounds


def repair(matrix: InfluenceMatrix, S: Iterable[int], products: Sequence[ProductSpec], epsilon: float,
           scales: dict[str, float] | None = None,
           normalized: dict[str, float] | None = None) -> tuple[set[int], set[str]]:
    """Top up products whose normalized influence fell below ``(1 - 1/e - 2 eps) k_j``.

    For each such product a fresh set ``M_j`` is grown greedily from the empty
    set until ``I_j(M_j) >= (1 - 1/e) k_j`` and is then merged into ``S``.
    """
    if scales is None or normalized is None:
        scales, normalized = normalize(matrix, products)
    S = set(S)
    repaired = set()
    trigger = ONE_MINUS_INV_E - 2 * epsilon
    for p in products:
        j, k = p.product_id, normalized[p.product_id]
        if k <= 0:
            continue
        weights = matrix.product_weights(j) / scales[j]
        if Coverage(matrix, weights, S).value() >= trigger * k:
            continue
        M = Coverage(matrix, weights)
        target = ONE_MINUS_INV_E * k
        while M.value() < target:
            gains = M.gains()
            if M.members:
                gains[list(M.members)] = -np.inf
            best = int(np.argmax(gains))
            if not gains[best] > 0:
                raise InfeasibleError(f"product {j}: repair exhausted the slots below target")
            M.add(best)
        S |= M.members
        repaired.add(j)
    return S, repaired


def _summarize(inst: Instance, S, epsilon, rounds, repaired, budget=None, x=None) -> CoverSolution:
    attained = {p.product_id: product_influence(inst.matrix, S, p.product_id) for p in inst.products}
    thresholds = {p.product_id: p.threshold for p in inst.products}
    level = ONE_MINUS_INV_E - epsilon
    satisfied = {j: attained[j] >= level * thresholds[j] - 1e-9 for j in attained}
    return CoverSolution(frozenset(S), inst.costs.of(S), attained, thresholds, satisfied, rounds,
                         set(repaired), budget, x)


def solve_common(inst: Instance, config: BicriteriaConfig = BicriteriaConfig()) -> CoverSolution:
    """Common multi-product slot selection.

    Without a fixed ``config.budget`` the polytope size (knapsack budget or
    cardinality cap) is doubled, starting from the cheapest slot (or cap 1),
    until the rounded set alone clears the repair trigger for every product;
    the last size tried is the ground-set total.
    """
    matrix, eps = inst.matrix, config.epsilon
    scales, normalized = normalize(matrix, inst.products)
    active = {j: scales[j] for j, k in normalized.items() if k > 0}
    if not active:
        return _summarize(inst, set(), eps, 0, ())
    weights = aggregate_weights(matrix, active)
    r = max(1, sparsity(matrix))
    trigger = ONE_MINUS_INV_E - 2 * eps
    costs = inst.costs.cost
    ss = np.random.SeedSequence(config.seed)

    if config.polytope == "knapsack":
        ceiling = float(costs.sum())
        size = config.budget if config.budget is not None else float(costs.min())
        make = lambda b: Polytope.knapsack(costs, b)  # noqa: E731
    else:
        ceiling = matrix.n_slots
        size = config.budget if config.budget is not None else 1
        make = lambda b: Polytope.cardinality(int(b))  # noqa: E731

    while True:
        x, _ = continuous_greedy(matrix, make(size), weights, T=config.T, step=config.step, trace=False)
        S, rounds = round_and_union(x, eps, r, ss.spawn(1)[0])
        covered = all(
            Coverage(matrix, matrix.product_weights(j) / scales[j], S).value() >= trigger * normalized[j]
            for j in active)
        if covered or config.budget is not None or size >= ceiling:
            break
        size = min(size * 2, ceiling)
    log.debug("solve_common: polytope size %s, %d rounds, |S| = %d before repair", size, rounds, len(S))
    S, repaired = repair(matrix, S, inst.products, eps, scales, normalized)
    return _summarize(inst, S, eps, rounds, repaired, size, x)
