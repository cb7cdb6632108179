"""Disjoint multi-product allocation by sampled (product order, slot priority) permutations.

Each sample runs a budgeted greedy per product, in the sampled product order,
over slots nobody else holds. The slot permutation only decides ties between
equal marginal gains. The cheapest feasible sample wins.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .influence import Coverage, InfluenceMatrix
from .instance import Instance
from .model import CostTable, ProductSpec, ValidationError

log = logging.getLogger(__name__)

DEMAND_TOL = 1e-9
EXHAUSTIVE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class PermutationSample:
    product_order: tuple[str, ...]
    slot_priority: np.ndarray
    seed: object = None

    def __post_init__(self):
        prio = np.asarray(self.slot_priority, dtype=int)
        if not np.array_equal(np.sort(prio), np.arange(len(prio))):
            raise ValidationError("slot_priority is not a permutation")
        if len(set(self.product_order)) != len(self.product_order):
            raise ValidationError("product_order repeats a product")
        object.__setattr__(self, "slot_priority", prio)

    @classmethod
    def draw(cls, products: Sequence[str], n_slots: int, seed) -> "PermutationSample":
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(products))
        return cls(tuple(products[i] for i in order), rng.permutation(n_slots), seed)

    def key(self) -> tuple:
        return self.product_order, self.slot_priority.tobytes()


@dataclass
class AllocationOutcome:
    sets: dict[str, frozenset[int]]
    feasible: bool
    cost: float
    residual_budgets: dict[str, float]
    attained: dict[str, float] = field(default_factory=dict)
    demands: dict[str, float] = field(default_factory=dict)

    @property
    def satisfied(self) -> dict[str, bool]:
        return {j: self.attained.get(j, 0.0) >= d - DEMAND_TOL for j, d in self.demands.items()}

    @property
    def n_satisfied(self) -> int:
        return sum(self.satisfied.values())

    @property
    def n_slots(self) -> int:
        return sum(len(s) for s in self.sets.values())

    @property
    def total_influence(self) -> float:
        return float(sum(self.attained.values()))

    def dump_sets(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("product_id", "slot_id"))
            for j, S in self.sets.items():
                for s in sorted(S):
                    w.writerow((j, s))


@dataclass
class SampleStats:
    requested_samples: int
    samples_run: int = 0
    feasible_count: int = 0
    best_cost: float = math.inf
    cost_upper_bound: float = 0.0
    pilot_samples: int = 0
    history: list[tuple[int, bool, float]] = field(default_factory=list)

    def best_cost_curve(self) -> list[float]:
        """Best feasible cost after each sample (inf until the first feasible one)."""
        best, out = math.inf, []
        for _, ok, c in self.history:
            if ok:
                best = min(best, c)
            out.append(best)
        return out

    def dump(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("sample_id", "feasible", "cost"))
            for i, ok, c in self.history:
                w.writerow((i, int(ok), repr(c)))


def sample_size(delta_conf: float, epsilon: float, total_cost: float, best_cost_estimate: float) -> int:
    """Hoeffding sample count ``ceil(ln(2/delta) w(BS)^2 / (2 eps^2 W_A^2))``."""
    if not best_cost_estimate > 0:
        raise ValidationError("best cost estimate must be positive")
    if not 0 < delta_conf < 1 or not 0 < epsilon < 1:
        raise ValidationError("delta_conf and epsilon must lie in (0, 1)")
    value = math.log(2.0 / delta_conf) * total_cost ** 2 / (2.0 * epsilon ** 2 * best_cost_estimate ** 2)
    return math.ceil(value - 1e-9 * value)


def _demand_met(value: float, demand: float) -> bool:
    return value >= demand - DEMAND_TOL


def run_one_permutation(matrix: InfluenceMatrix, costs: CostTable, products: Sequence[ProductSpec],
                        perm: PermutationSample, ratio: bool = False) -> AllocationOutcome:
    """Budgeted greedy per product in ``perm.product_order``.

    Picks the unallocated, affordable slot with the largest product-specific
    marginal gain (gain per unit cost when ``ratio``); equal scores go to the
    slot earliest in ``perm.slot_priority``. Stops at the first product whose
    demand cannot be met.
    """
    specs = {p.product_id: p for p in products}
    w = costs.cost
    n = matrix.n_slots
    rank = np.empty(n, dtype=int)
    rank[perm.slot_priority] = np.arange(n)
    taken = np.zeros(n, dtype=bool)
    sets = {p.product_id: frozenset() for p in products}
    residual = {p.product_id: float(p.budget) for p in products}
    attained = {p.product_id: 0.0 for p in products}
    feasible = True
    for j in perm.product_order:
        spec = specs[j]
        cov = Coverage(matrix, matrix.product_weights(j))
        v = float(spec.budget)
        while v > 0 and not _demand_met(cov.value(), spec.demand):
            ok = ~taken & (w <= v)
            if not ok.any():
                break
            score = cov.gains()
            if ratio:
                score = score / w
            best = score[ok].max()
            if not best > 0:
                break
            cands = np.flatnonzero(ok & (score >= best - 1e-12 * max(1.0, best)))
            s = int(cands[np.argmin(rank[cands])])
            cov.add(s)
            taken[s] = True
            v -= w[s]
        sets[j] = frozenset(cov.members)
        residual[j] = v
        attained[j] = cov.value()
        if not _demand_met(attained[j], spec.demand):
            feasible = False
            break
    cost = float(w[taken].sum())
    return AllocationOutcome(sets, feasible, cost, residual, attained,
                             {p.product_id: p.demand for p in products})


def _better(a: AllocationOutcome, b: AllocationOutcome | None) -> bool:
    """Feasible beats infeasible; then more satisfied products; then lower cost."""
    if b is None:
        return True
    ka = (a.feasible, a.n_satisfied, -a.cost)
    kb = (b.feasible, b.n_satisfied, -b.cost)
    return ka > kb


def _exhaustive(products, n_slots):
    ids = [p.product_id for p in products]
    count = math.factorial(len(ids)) * math.factorial(n_slots)
    if count > EXHAUSTIVE_LIMIT:
        raise ValidationError(f"{count} permutation pairs exceed the exhaustive limit {EXHAUSTIVE_LIMIT}")
    for order in itertools.permutations(ids):
        for prio in itertools.permutations(range(n_slots)):
            yield PermutationSample(order, np.array(prio))


def solve_disjoint(inst: Instance, delta_conf: float = 0.1, epsilon: float = 0.1, pilot: int = 64,
                   max_samples: int = 1000, seed=0, samples: int | None = None, distinct: bool = False,
                   exhaustive: bool = False, ratio: bool = False) -> tuple[AllocationOutcome, SampleStats]:
    """Return the cheapest feasible allocation over sampled permutations.

    By default a pilot of ``min(pilot, max_samples)`` samples estimates the
    best cost, which fixes the Hoeffding sample count (capped at
    ``max_samples``). ``samples`` skips the pilot and runs exactly that many;
    ``exhaustive`` enumerates every pair instead. When nothing is feasible the
    returned outcome is the one satisfying the most products, with
    ``feasible=False``.
    """
    matrix, costs, products = inst.matrix, inst.costs, inst.products
    ids = [p.product_id for p in products]
    n = matrix.n_slots
    stats = SampleStats(requested_samples=0, cost_upper_bound=costs.total_cost)
    best: AllocationOutcome | None = None
    seen: set = set()

    def run(perm, i):
        nonlocal best
        out = run_one_permutation(matrix, costs, products, perm, ratio)
        stats.samples_run += 1
        stats.history.append((i, out.feasible, out.cost))
        if out.feasible:
            stats.feasible_count += 1
            stats.best_cost = min(stats.best_cost, out.cost)
        if _better(out, best):
            best = out

    if exhaustive:
        for i, perm in enumerate(_exhaustive(products, n)):
            run(perm, i)
        stats.requested_samples = stats.samples_run
        return best, stats

    distinct_cap = math.factorial(len(ids)) * math.factorial(n) if distinct else math.inf
    counter = itertools.count()
    if seed is None:
        seed = np.random.SeedSequence().entropy

    def draw():
        while True:
            perm = PermutationSample.draw(ids, n, [seed, next(counter)])
            if not distinct or perm.key() not in seen:
                seen.add(perm.key())
                return perm

    if samples is not None:
        if samples < 1:
            raise ValidationError("need at least one sample")
        total = int(min(samples, distinct_cap))
        stats.requested_samples = total
    else:
        if max_samples < 1:
            raise ValidationError("need at least one sample")
        n_pilot = int(min(pilot, max_samples, distinct_cap))
        for i in range(n_pilot):
            run(draw(), i)
        stats.pilot_samples = n_pilot
        if stats.feasible_count and stats.best_cost == 0:
            stats.requested_samples = n_pilot  # nothing can beat an empty allocation
        elif stats.feasible_count:
            stats.requested_samples = sample_size(delta_conf, epsilon, costs.total_cost, stats.best_cost)
        else:
            log.warning("pilot found no feasible allocation; running the fixed cap of %d samples", max_samples)
            stats.requested_samples = max_samples
        total = int(min(max(stats.requested_samples, n_pilot), max_samples, distinct_cap))
    for i in range(stats.samples_run, total):
        run(draw(), i)
    return best, stats
