import itertools
import math

import numpy as np
import pytest

from billboard_slots import CostTable, Instance, ProductSpec
from billboard_slots.disjoint import PermutationSample, run_one_permutation, sample_size, solve_disjoint
from billboard_slots.model import ValidationError

from conftest import make_matrix, oracle_product_users, oracle_value, random_instance


def oracle_disjoint_opt(entries, aff, costs, specs, n_slots):
    """Cheapest disjoint assignment (slot -> product or nobody) meeting all demands within budgets."""
    ids = [p.product_id for p in specs]
    best = math.inf
    for assign in itertools.product(range(len(ids) + 1), repeat=n_slots):
        total = sum(costs[s] for s in range(n_slots) if assign[s] < len(ids))
        if total >= best:
            continue
        ok = True
        for k, p in enumerate(specs):
            S = [s for s in range(n_slots) if assign[s] == k]
            if sum(costs[s] for s in S) > p.budget + 1e-9 or \
                    oracle_value(entries, S, oracle_product_users(aff, p.product_id)) < p.demand - 1e-9:
                ok = False
                break
        if ok:
            best = total
    return best


@pytest.fixture
def hand():
    entries = {0: {"a": 1.0}, 1: {"d": 1.0, "c": 0.5}, 2: {"b": 1.0, "c": 1.0}, 3: {"c": 1.0}}
    aff = {"a": {"P1"}, "b": {"P1"}, "c": {"P2"}, "d": {"P1", "P2"}}
    m = make_matrix(entries, aff, ["P1", "P2"])
    costs = CostTable([1.0, 2.0, 2.0, 1.0])
    specs = [ProductSpec("P1", demand=2, budget=4), ProductSpec("P2", demand=1.5, budget=3)]
    return m, costs, specs


class TestSampleSize:
    def test_example(self):
        # ln(20) * 100^2 / (2 * 0.01 * 2500) = 599.1
        assert sample_size(0.1, 0.1, 100, 50) == 600

    def test_monotone(self):
        assert sample_size(0.05, 0.1, 100, 50) >= sample_size(0.1, 0.1, 100, 50)
        assert sample_size(0.1, 0.05, 100, 50) >= sample_size(0.1, 0.1, 100, 50)
        assert sample_size(0.1, 0.1, 100, 25) >= sample_size(0.1, 0.1, 100, 50)

    def test_rejects(self):
        with pytest.raises(ValidationError):
            sample_size(0.1, 0.1, 100, 0)
        with pytest.raises(ValidationError):
            sample_size(1.0, 0.1, 100, 5)


class TestHandTrace:
    def test_p1_first_fails(self, hand):
        m, costs, specs = hand
        out = run_one_permutation(m, costs, specs, PermutationSample(("P1", "P2"), np.arange(4)))
        # P1 takes s0 then s1 (tie with s2, lower priority wins); P2 gets s2 only -> 1 < 1.5
        assert out.sets["P1"] == {0, 1} and out.sets["P2"] == {2}
        assert not out.feasible and out.cost == 5.0
        assert out.satisfied == {"P1": True, "P2": False}

    def test_p2_first_succeeds(self, hand):
        m, costs, specs = hand
        out = run_one_permutation(m, costs, specs, PermutationSample(("P2", "P1"), np.arange(4)))
        assert out.sets == {"P2": {1}, "P1": {0, 2}}
        assert out.feasible and out.cost == 5.0
        assert out.residual_budgets == {"P1": 1.0, "P2": 1.0}
        assert out.attained == pytest.approx({"P1": 2.0, "P2": 1.5})

    def test_priority_breaks_ties(self, hand):
        m, costs, specs = hand
        prio = np.array([2, 0, 1, 3])  # s2 ahead of s1
        out = run_one_permutation(m, costs, specs, PermutationSample(("P1", "P2"), prio))
        assert out.sets == {"P1": {0, 2}, "P2": {1}} and out.feasible

    def test_solver_finds_feasible(self, hand):
        m, costs, specs = hand
        out, stats = solve_disjoint(Instance(m, costs, specs), samples=40, seed=3)
        assert out.feasible and out.cost == 5.0
        assert oracle_disjoint_opt({0: {"a": 1.0}, 1: {"d": 1.0, "c": 0.5}, 2: {"b": 1.0, "c": 1.0},
                                    3: {"c": 1.0}},
                                   {"a": {"P1"}, "b": {"P1"}, "c": {"P2"}, "d": {"P1", "P2"}},
                                   costs.cost, specs, 4) == 5.0


class TestEdgeCases:
    def test_zero_demands(self, rng):
        inst, *_ = random_instance(rng, 5, 5, 2)
        specs = [ProductSpec(p.product_id, demand=0, budget=p.budget) for p in inst.products]
        out, stats = solve_disjoint(Instance(inst.matrix, inst.costs, specs), seed=0)
        assert out.feasible and out.cost == 0.0 and out.n_slots == 0
        assert stats.requested_samples == stats.samples_run

    def test_budget_below_every_cost(self):
        m = make_matrix({0: {"u": 1.0}, 1: {"u": 0.5}}, {"u": {"p"}}, ["p"])
        inst = Instance(m, CostTable([5.0, 6.0]), [ProductSpec("p", demand=0.5, budget=4)])
        out, stats = solve_disjoint(inst, samples=5, seed=0)
        assert not out.feasible and out.sets["p"] == frozenset() and stats.feasible_count == 0

    def test_constant_cost(self):
        # each product has exactly one useful slot, so every permutation allocates the same way
        m = make_matrix({0: {"a": 1.0}, 1: {"b": 1.0}}, {"a": {"P"}, "b": {"Q"}}, ["P", "Q"])
        inst = Instance(m, CostTable([2.0, 3.0]), [ProductSpec("P", demand=1, budget=5),
                                                     ProductSpec("Q", demand=1, budget=5)])
        out, stats = solve_disjoint(inst, samples=12, seed=0)
        assert {c for _, _, c in stats.history} == {5.0} and out.cost == 5.0

    def test_demand_above_supply(self, rng):
        inst, entries, aff = random_instance(rng, 5, 5, 2)
        first = inst.products[0]
        supply = oracle_value(entries, range(5), oracle_product_users(aff, first.product_id))
        specs = [ProductSpec(first.product_id, demand=supply + 1, budget=1e9)] + list(inst.products[1:])
        out, stats = solve_disjoint(Instance(inst.matrix, inst.costs, specs), samples=20, seed=0)
        assert not out.feasible and stats.feasible_count == 0 and math.isinf(stats.best_cost)

    def test_invalid_permutation(self):
        with pytest.raises(ValidationError):
            PermutationSample(("a",), np.array([0, 0, 1]))
        with pytest.raises(ValidationError):
            PermutationSample(("a", "a"), np.arange(2))

    def test_exhaustive_limit(self, rng):
        inst, *_ = random_instance(rng, 10, 4, 2)
        with pytest.raises(ValidationError, match="exhaustive"):
            solve_disjoint(inst, exhaustive=True)


class TestAgainstOracles:
    def test_invariants_on_random_instances(self):
        for seed in range(25):
            rng = np.random.default_rng(seed)
            inst, entries, aff = random_instance(rng, 6, 6, 2, demand_frac=0.4, budget_frac=0.5)
            out, stats = solve_disjoint(inst, samples=30, seed=seed)
            sets = list(out.sets.values())
            for A, B in itertools.combinations(sets, 2):
                assert not A & B
            for p in inst.products:
                S = out.sets[p.product_id]
                assert inst.costs.of(S) <= p.budget + 1e-9
                assert out.attained[p.product_id] == pytest.approx(
                    oracle_value(entries, S, oracle_product_users(aff, p.product_id)), abs=1e-9)
            assert out.cost == pytest.approx(sum(inst.costs.of(S) for S in sets))
            if out.feasible:
                opt = oracle_disjoint_opt(entries, aff, inst.costs.cost, inst.products, 6)
                assert out.cost >= opt - 1e-9

    def test_sampling_reaches_exhaustive_best(self):
        hits = total = 0
        for seed in range(15):
            rng = np.random.default_rng(100 + seed)
            inst, *_ = random_instance(rng, 4, 5, 2, demand_frac=0.4, budget_frac=0.6)
            full, fstats = solve_disjoint(inst, exhaustive=True)
            assert fstats.samples_run == 2 * 24
            if not full.feasible:
                continue
            total += 1
            got, _ = solve_disjoint(inst, samples=200, seed=seed)
            assert got.cost >= full.cost - 1e-9
            hits += got.feasible and got.cost == pytest.approx(full.cost)
        assert total and hits == total

    def test_anytime_monotone(self, rng):
        inst, *_ = random_instance(rng, 7, 6, 3, demand_frac=0.3, budget_frac=0.5)
        _, stats = solve_disjoint(inst, samples=60, seed=1)
        curve = stats.best_cost_curve()
        assert len(curve) == 60 and all(b <= a for a, b in zip(curve, curve[1:]))

    def test_distinct_caps_at_permutation_count(self, rng):
        inst, *_ = random_instance(rng, 3, 4, 2)
        _, stats = solve_disjoint(inst, samples=100, seed=0, distinct=True)
        assert stats.samples_run == 2 * 6

    def test_pilot_then_hoeffding(self, rng):
        inst, *_ = random_instance(rng, 6, 6, 2, demand_frac=0.3, budget_frac=0.6)
        _, stats = solve_disjoint(inst, pilot=8, max_samples=50, seed=2)
        assert stats.pilot_samples == 8
        pilot_best = min((c for _, ok, c in stats.history[:8] if ok), default=None)
        assert pilot_best, "fixture instance should be feasible in the pilot"
        want = sample_size(0.1, 0.1, inst.costs.total_cost, pilot_best)
        assert stats.requested_samples == want
        assert stats.samples_run == min(max(want, 8), 50)

    def test_deterministic(self, rng):
        inst, *_ = random_instance(rng, 6, 6, 2)
        a, sa = solve_disjoint(inst, samples=20, seed=9)
        b, sb = solve_disjoint(inst, samples=20, seed=9)
        assert a.sets == b.sets and sa.history == sb.history


def test_dumps(tmp_path, hand):
    m, costs, specs = hand
    out, stats = solve_disjoint(Instance(m, costs, specs), samples=10, seed=0)
    out.dump_sets(tmp_path / "sets.csv")
    stats.dump(tmp_path / "samples.csv")
    assert (tmp_path / "sets.csv").read_text().splitlines()[0] == "product_id,slot_id"
    assert len((tmp_path / "samples.csv").read_text().splitlines()) == 11
