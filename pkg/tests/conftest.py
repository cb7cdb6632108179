"""Shared fixtures and brute-force oracles.

The oracles work from plain ``{slot: {user: prob}}`` dicts and never touch the
package's sparse evaluators, so they stay independent of the code they check.
"""
import itertools
import math

import numpy as np
import pytest

from billboard_slots import CostTable, InfluenceMatrix, Instance, ProductSpec


def random_entries(rng, n_slots, n_users, n_products, density=0.4, single_affinity=False):
    users = [f"u{i}" for i in range(n_users)]
    products = [f"p{k}" for k in range(n_products)]
    entries = {}
    for s in range(n_slots):
        row = {}
        for u in users:
            if rng.random() < density:
                row[u] = float(rng.choice([0.25, 0.5, 0.75, 1.0]) if rng.random() < 0.3 else rng.uniform(0.05, 1.0))
        entries[s] = row
    affinities = {}
    for u in users:
        if single_affinity:
            affinities[u] = {products[rng.integers(n_products)]}
        else:
            k = int(rng.integers(0, n_products + 1))
            affinities[u] = set(rng.choice(products, size=k, replace=False).tolist())
    return entries, affinities, products


def make_matrix(entries, affinities, products, n_slots=None):
    n = n_slots if n_slots is not None else len(entries)
    return InfluenceMatrix.from_entries(n, entries, affinities, products, users=sorted(affinities))


def oracle_value(entries, S, users):
    total = 0.0
    for u in users:
        miss = 1.0
        for s in S:
            miss *= 1.0 - entries.get(s, {}).get(u, 0.0)
        total += 1.0 - miss
    return total


def oracle_product_users(affinities, product):
    return [u for u, a in affinities.items() if product in a]


def oracle_multilinear(entries, x, users):
    """Expectation of the set function by enumerating all subsets."""
    n = len(x)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        prob = math.prod(x[i] if b else 1.0 - x[i] for i, b in enumerate(bits))
        if prob == 0.0:
            continue
        S = [i for i, b in enumerate(bits) if b]
        total += prob * oracle_value(entries, S, users)
    return total


def oracle_min_cover_cost(entries, affinities, costs, thresholds, n_slots):
    """Cheapest subset meeting every threshold, by enumeration (inf if none)."""
    best = math.inf
    for bits in itertools.product((0, 1), repeat=n_slots):
        S = [i for i, b in enumerate(bits) if b]
        c = sum(costs[i] for i in S)
        if c >= best:
            continue
        if all(oracle_value(entries, S, oracle_product_users(affinities, j)) >= k - 1e-12
               for j, k in thresholds.items()):
            best = c
    return best


def random_instance(rng, n_slots, n_users, n_products, density=0.4, demand_frac=0.5, budget_frac=None):
    entries, affinities, products = random_entries(rng, n_slots, n_users, n_products, density)
    matrix = make_matrix(entries, affinities, products)
    costs = CostTable(rng.integers(1, 6, size=n_slots).astype(float))
    specs = []
    for j in products:
        supply = oracle_value(entries, range(n_slots), oracle_product_users(affinities, j))
        demand = float(np.floor(demand_frac * supply * rng.uniform(0.5, 1.0) * 100) / 100)
        budget = float(costs.total_cost * (budget_frac if budget_frac is not None else rng.uniform(0.2, 0.8)))
        specs.append(ProductSpec(j, demand=demand, threshold=demand, budget=budget))
    return Instance(matrix, costs, specs), entries, affinities


# one "PASS/FAIL criterion N: ..." line per acceptance check, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
