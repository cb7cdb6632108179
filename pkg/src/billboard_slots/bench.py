"""Synthetic instance generation and parameter sweeps.

Costs, demands and budgets follow the usual billboard-benchmark recipe:

    cost(s)  = floor(d * I(s) / 10),      d ~ U[0.8, 1.1]   (clamped to >= 1)
    demand_j = floor(w * sigma* * beta),  w ~ U[0.8, 1.2]
    budget_j = floor(h * demand_j),       h ~ U[0.9, 1.1]

where ``sigma*`` is the summed singleton influence of all slots.
"""
from __future__ import annotations

import csv
import itertools
import math
import time
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baselines import random_allocation, topk_allocation
from .cover import BicriteriaConfig, solve_common
from .disjoint import solve_disjoint
from .influence import InfluenceMatrix, build_influence_matrix, product_influence, singleton_influence, total_supply
from .instance import Instance
from .model import (Billboard, CostTable, InfeasibleError, ProductSpec, SlotUniverse, TimeInterval,
                    TrajectoryRecord, ValidationError)

ALGORITHMS = ("bca", "sampler", "random-baseline", "topk-baseline")
METRICS_HEADER = ("alpha", "beta", "products", "epsilon", "lambda", "seed", "algo",
                  "satisfied", "influence", "slots", "cost", "millis")

COST_FACTOR = (0.8, 1.1)
DEMAND_FACTOR = (0.8, 1.2)
BUDGET_FACTOR = (0.9, 1.1)
_FLOOR_GUARD = 1e-9  # absorbs representation error such as 0.8 * 500 * 0.01 = 3.9999...


def _floor(v):
    return np.floor(np.asarray(v, dtype=float) + _FLOOR_GUARD)


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float | None = None
    beta: float = 0.05
    product_count: int = 20
    epsilon: float = 0.1
    lambda_m: float = 100.0
    seeds: tuple[int, ...] = (0,)
    algorithms: tuple[str, ...] = ALGORITHMS
    # synthetic city
    users: int = 4000
    billboards: int = 10
    steps: int = 40
    step_seconds: int = 900
    slot_steps: int = 2
    grid: int = 6
    spacing_m: float = 200.0
    jitter_m: float = 40.0
    walk_length: int = 6
    affinities_per_user: int = 10
    origin: tuple[float, float] = (40.7580, -73.9855)
    start_time: int = 1_333_238_400
    # solvers
    delta_conf: float = 0.1
    pilot: int = 32
    max_samples: int = 200
    cg_step: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValidationError("alpha must be positive")
        if not self.beta > 0:
            raise ValidationError("beta must be positive")
        if not 0 < self.epsilon < 1:
            raise ValidationError("epsilon must lie in (0, 1)")
        if not self.lambda_m > 0:
            raise ValidationError("lambda must be positive")
        if self.product_count < 1:
            raise ValidationError("at least one product is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValidationError(f"unknown algorithms {sorted(unknown)}")
        if self.steps % self.slot_steps:
            raise ValidationError("slot_steps must divide steps")

    @property
    def per_product_ratio(self) -> float:
        """Demand per product as a fraction of total supply: alpha / |P| when alpha is set, else beta."""
        return self.alpha / self.product_count if self.alpha is not None else self.beta

    @property
    def slot_duration(self) -> int:
        return self.slot_steps * self.step_seconds

    @property
    def horizon(self) -> tuple[int, int]:
        return self.start_time, self.start_time + self.steps * self.step_seconds


@dataclass
class GeneratedInstance:
    universe: SlotUniverse
    matrix: InfluenceMatrix
    costs: CostTable
    products: list[ProductSpec]
    records: list[TrajectoryRecord]
    sigma_star: float
    provenance: dict = field(default_factory=dict)

    @property
    def instance(self) -> Instance:
        return Instance(self.matrix, self.costs, self.products, self.universe)

    @property
    def achieved_alpha(self) -> float:
        return sum(p.demand for p in self.products) / self.sigma_star if self.sigma_star else math.nan


# ---------------------------------------------------------------------------
# cost / demand / budget recipes


def costs_from_factors(influence: np.ndarray, factors: np.ndarray) -> np.ndarray:
    return np.maximum(_floor(factors * np.asarray(influence) / 10.0), 1.0)


def demands_from_factors(sigma_star: float, beta: float, factors: np.ndarray) -> np.ndarray:
    return _floor(factors * sigma_star * beta)


def budgets_from_factors(demands: np.ndarray, factors: np.ndarray) -> np.ndarray:
    return _floor(factors * np.asarray(demands))


def generate_costs(matrix: InfluenceMatrix, seed=None, return_factors: bool = False):
    factors = np.random.default_rng(seed).uniform(*COST_FACTOR, size=matrix.n_slots)
    table = CostTable(costs_from_factors(singleton_influence(matrix), factors))
    return (table, factors) if return_factors else table


def generate_demands(sigma_star: float, beta: float, product_count: int, seed=None, return_factors: bool = False):
    if not sigma_star > 0:
        raise ValidationError("total supply must be positive")
    factors = np.random.default_rng(seed).uniform(*DEMAND_FACTOR, size=product_count)
    demands = demands_from_factors(sigma_star, beta, factors)
    return (demands, factors) if return_factors else demands


def generate_budgets(demands: Sequence[float], seed=None, return_factors: bool = False):
    factors = np.random.default_rng(seed).uniform(*BUDGET_FACTOR, size=len(demands))
    budgets = budgets_from_factors(demands, factors)
    return (budgets, factors) if return_factors else budgets


# ---------------------------------------------------------------------------
# synthetic city


def _offset(origin, dx_m, dy_m):
    lat0, lon0 = origin
    lat = lat0 + np.degrees(dy_m / 6_371_008.8)
    lon = lon0 + np.degrees(dx_m / (6_371_008.8 * np.cos(np.radians(lat0))))
    return lat, lon


def generate_synthetic_trajectories(config: ExperimentConfig, seed=None) -> tuple[list[TrajectoryRecord], list[Billboard]]:
    """Users take short random walks on a street grid; billboards stand on intersections.

    Each user appears at ``walk_length`` consecutive time steps, moving to a
    neighboring intersection (or staying) each step, with a small positional
    jitter. Affinities are ``affinities_per_user`` distinct products drawn
    uniformly.
    """
    if config.product_count < 1:
        raise ValidationError("at least one product is required")
    rng = np.random.default_rng(seed)
    g = config.grid
    if config.billboards > g * g:
        raise ValidationError("more billboards than grid intersections")
    products = [f"p{k:03d}" for k in range(config.product_count)]
    k_aff = min(config.affinities_per_user, config.product_count)

    spots = rng.choice(g * g, size=config.billboards, replace=False)
    sizes = rng.uniform(1.0, 4.0, size=config.billboards)
    billboards = []
    for i, (spot, size) in enumerate(zip(spots, sizes)):
        lat, lon = _offset(config.origin, (spot % g) * config.spacing_m, (spot // g) * config.spacing_m)
        billboards.append(Billboard(f"b{i:04d}", (float(lat), float(lon)), float(size)))

    moves = np.array([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])
    records = []
    walk = min(config.walk_length, config.steps)
    for u in range(config.users):
        name = f"u{u:05d}"
        aff = frozenset(products[k] for k in rng.choice(config.product_count, size=k_aff, replace=False))
        pos = rng.integers(0, g, size=2)
        t0 = int(rng.integers(0, config.steps - walk + 1))
        for k in range(walk):
            if k:
                pos = np.clip(pos + moves[rng.integers(len(moves))], 0, g - 1)
            jx, jy = rng.uniform(-config.jitter_m, config.jitter_m, size=2)
            lat, lon = _offset(config.origin, pos[0] * config.spacing_m + jx, pos[1] * config.spacing_m + jy)
            start = config.start_time + (t0 + k) * config.step_seconds
            records.append(TrajectoryRecord(name, (float(lat), float(lon)),
                                            TimeInterval(start, start + config.step_seconds), aff))
    return records, billboards


def generate_instance(config: ExperimentConfig, seed: int = 0, city=None) -> GeneratedInstance:
    """Build a full instance; ``city`` reuses ``(records, billboards, universe, matrix)`` across demand settings.

    Costs depend only on ``(config, seed)``; demand and budget factors are drawn
    from their own streams, so sweeping alpha rescales demands without
    redrawing anything else.
    """
    ss_traj, ss_cost, ss_dem, ss_bud = np.random.SeedSequence(seed).spawn(4)
    if city is None:
        records, billboards = generate_synthetic_trajectories(config, ss_traj)
        universe = SlotUniverse(billboards, config.horizon, config.slot_duration)
        products = [f"p{k:03d}" for k in range(config.product_count)]
        matrix = build_influence_matrix(records, universe, config.lambda_m, products)
    else:
        records, billboards, universe, matrix = city
    costs, cost_f = generate_costs(matrix, ss_cost, return_factors=True)
    sigma_star = total_supply(matrix)
    if sigma_star <= 0:
        raise InfeasibleError("generated city has zero influence supply")
    demands, dem_f = generate_demands(sigma_star, config.per_product_ratio, config.product_count, ss_dem,
                                      return_factors=True)
    budgets, bud_f = generate_budgets(demands, ss_bud, return_factors=True)
    specs = [ProductSpec(p, float(d), float(d), float(b))
             for p, d, b in zip(matrix.products, demands, budgets)]
    return GeneratedInstance(universe, matrix, costs, specs, records, sigma_star,
                             {"cost_factors": cost_f, "demand_factors": dem_f, "budget_factors": bud_f})


# ---------------------------------------------------------------------------
# running algorithms


def run_algorithm(algo: str, gen: GeneratedInstance, config: ExperimentConfig, seed: int = 0) -> dict:
    """Run one algorithm and return its metrics (satisfied, influence, slots, cost, millis, feasible)."""
    inst = gen.instance
    t0 = time.perf_counter()
    if algo == "bca":
        try:
            sol = solve_common(inst, BicriteriaConfig(epsilon=config.epsilon, seed=seed, step=config.cg_step))
        except InfeasibleError:
            return _infeasible_row(t0)
        out = {"satisfied": sol.n_satisfied, "influence": sum(sol.attained.values()),
               "slots": len(sol.slots), "cost": sol.cost, "feasible": all(sol.satisfied.values()),
               "solution": sol}
    else:
        if algo == "sampler":
            outcome, _ = solve_disjoint(inst, config.delta_conf, config.epsilon, pilot=config.pilot,
                                        max_samples=config.max_samples, seed=seed)
        elif algo == "random-baseline":
            outcome = random_allocation(inst.matrix, inst.costs, inst.products, seed)
        elif algo == "topk-baseline":
            outcome = topk_allocation(inst.matrix, inst.costs, inst.products)
        else:
            raise ValidationError(f"unknown algorithm {algo!r}")
        out = {"satisfied": outcome.n_satisfied, "influence": outcome.total_influence,
               "slots": outcome.n_slots, "cost": outcome.cost, "feasible": outcome.feasible,
               "solution": outcome}
    out["millis"] = (time.perf_counter() - t0) * 1000.0
    return out


def _infeasible_row(t0):
    return {"satisfied": 0, "influence": 0.0, "slots": 0, "cost": 0.0, "feasible": False,
            "solution": None, "millis": (time.perf_counter() - t0) * 1000.0}


def expand_grid(base: ExperimentConfig, alphas: Iterable[float | None] = (None,),
                betas: Iterable[float] | None = None, product_counts: Iterable[int] | None = None,
                epsilons: Iterable[float] | None = None, lambdas: Iterable[float] | None = None) -> list[ExperimentConfig]:
    """Cartesian product of parameter lists over ``base`` (seeds and algorithms stay on each config)."""
    grid = itertools.product(alphas, betas or [base.beta], product_counts or [base.product_count],
                             epsilons or [base.epsilon], lambdas or [base.lambda_m])
    return [replace(base, alpha=a, beta=b, product_count=p, epsilon=e, lambda_m=lm) for a, b, p, e, lm in grid]


def _city_key(cfg: ExperimentConfig, seed: int):
    d = asdict(cfg)
    for k in ("alpha", "beta", "epsilon", "seeds", "algorithms", "delta_conf", "pilot", "max_samples", "cg_step"):
        d.pop(k)
    return tuple(sorted((k, str(v)) for k, v in d.items())), seed


def _run_cell(args):
    cfg, seed, city = args
    gen = generate_instance(cfg, seed, city)
    rows = []
    for algo in cfg.algorithms:
        try:
            m = run_algorithm(algo, gen, cfg, seed)
        except InfeasibleError:
            m = _infeasible_row(time.perf_counter())
        rows.append({
            "alpha": cfg.alpha if cfg.alpha is not None else gen.achieved_alpha,
            "beta": cfg.per_product_ratio, "products": cfg.product_count, "epsilon": cfg.epsilon,
            "lambda": cfg.lambda_m, "seed": seed, "algo": algo, "satisfied": m["satisfied"],
            "influence": m["influence"], "slots": m["slots"], "cost": m["cost"], "millis": m["millis"],
        })
    return rows


def run_sweep(configs: Sequence[ExperimentConfig], workers: int = 1) -> list[dict]:
    """One metrics row per (config, seed, algorithm), in grid order.

    Cells sharing a city (same scale, products and lambda) reuse one trajectory
    set and influence matrix.
    """
    cities = {}
    jobs = []
    for cfg in configs:
        for seed in cfg.seeds:
            key = _city_key(cfg, seed)
            if key not in cities:
                g = generate_instance(cfg, seed)
                cities[key] = (g.records, list(g.universe.billboards), g.universe, g.matrix)
            jobs.append((cfg, seed, cities[key]))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def write_metrics(path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=METRICS_HEADER, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})


def read_metrics(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_HEADER:
            raise ValidationError(f"unexpected metrics header {reader.fieldnames}")
        return list(reader)


GNUPLOT_STUB = """\
# plot metrics against alpha, one line per algorithm
set datafile separator ','
set key left top
set xlabel 'alpha'
metrics = '{metrics}'
algos = 'bca sampler random-baseline topk-baseline'
do for [col in 'influence slots millis cost'] {{
    set output col.'.png'
    set terminal pngcairo size 640,480
    set ylabel col
    plot for [a in algos] metrics using (strcol('algo') eq a ? column('alpha') : 1/0):(column(col)) \\
        with linespoints title a
}}
"""


def write_gnuplot(path, metrics_path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GNUPLOT_STUB.format(metrics=metrics_path))
