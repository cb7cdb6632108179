import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from billboard_slots.influence import (Coverage, InfluenceMatrix, build_influence_matrix, influence,
                                       marginal_gain, product_influence, sparsity, total_supply)
from billboard_slots.model import Billboard, SlotUniverse, TimeInterval, TrajectoryRecord, ValidationError

from conftest import make_matrix, oracle_product_users, oracle_value, random_entries


def _mat(entries, affinities, n_slots=None):
    products = sorted(set().union(*affinities.values())) if affinities else []
    return make_matrix(entries, affinities, products, n_slots)


class TestBuild:
    LAT, LON = 40.7580, -73.9855

    def _universe(self, sizes):
        bbs = [Billboard(f"b{i}", (self.LAT + 0.01 * i, self.LON), s) for i, s in enumerate(sizes)]
        return SlotUniverse(bbs, (0, 200), 100)

    def test_full_size_gives_probability_one(self):
        uni = self._universe([40.0, 10.0])
        recs = [TrajectoryRecord("u", (self.LAT, self.LON), TimeInterval(10, 20), frozenset({"p"}))]
        m = build_influence_matrix(recs, uni, 50.0)
        assert m.entries(0) == [("u", 1.0)]
        assert m.P.nnz == 1

    def test_size_ratio(self):
        uni = self._universe([40.0, 10.0])
        recs = [TrajectoryRecord("u", (self.LAT + 0.01, self.LON), TimeInterval(150, 160), frozenset({"p"}))]
        m = build_influence_matrix(recs, uni, 50.0)
        # billboard b1 (size 10 of max 40), second window -> slot 3
        assert m.entries(3) == [("u", 0.25)]
        assert m.max_size == 40.0

    def test_far_user_has_no_entries(self):
        uni = self._universe([1.0])
        recs = [TrajectoryRecord("far", (self.LAT + 0.1, self.LON), TimeInterval(0, 200), frozenset({"p"})),
                TrajectoryRecord("near", (self.LAT, self.LON + 0.0005), TimeInterval(0, 200), frozenset({"p"}))]
        m = build_influence_matrix(recs, uni, 100.0)
        assert m.users == ("far", "near")
        assert np.asarray(m.P[:, 0].todense()).sum() == 0
        assert [u for u, _ in m.entries(0)] == ["near"] and [u for u, _ in m.entries(1)] == ["near"]
        assert m.per_product_users["p"] == {"far", "near"}

    def test_lambda_threshold(self):
        uni = self._universe([1.0])
        # about 55.6 m north of the billboard
        recs = [TrajectoryRecord("u", (self.LAT + 0.0005, self.LON), TimeInterval(0, 50), frozenset())]
        assert build_influence_matrix(recs, uni, 50.0).P.nnz == 0
        assert build_influence_matrix(recs, uni, 60.0).P.nnz == 1

    def test_errors(self):
        with pytest.raises(ValidationError):
            build_influence_matrix([], self._universe([1.0]), 0.0)


class TestInfluence:
    def test_empty_set(self):
        m = _mat({0: {"u": 0.5}}, {"u": {"p"}})
        assert influence(m, []) == 0.0
        assert product_influence(m, [], "p") == 0.0

    def test_single(self):
        m = _mat({0: {"u": 0.5}}, {"u": {"p"}})
        assert influence(m, [0]) == 0.5

    def test_two_slots_same_user(self):
        m = _mat({0: {"u": 0.5}, 1: {"u": 0.5}}, {"u": {"p"}})
        assert influence(m, [0, 1]) == pytest.approx(0.75, abs=1e-15)

    def test_product_without_users(self):
        m = _mat({0: {"u": 0.5}}, {"u": {"a"}, "v": {"b"}})
        m2 = InfluenceMatrix.from_entries(1, {0: {"u": 0.5}}, {"u": {"a"}}, products=["a", "b"])
        assert product_influence(m2, [0], "b") == 0.0
        with pytest.raises(KeyError):
            product_influence(m, [0], "zzz")

    def test_partition_sums_to_total(self):
        # brute force on a 5-user, 4-slot instance where each user has exactly one product
        rng = np.random.default_rng(7)
        entries, aff, products = random_entries(rng, 4, 5, 3, density=0.7, single_affinity=True)
        m = make_matrix(entries, aff, products)
        for bits in range(16):
            S = [s for s in range(4) if bits >> s & 1]
            parts = sum(product_influence(m, S, j) for j in products)
            assert parts == pytest.approx(influence(m, S), abs=1e-12)
            assert influence(m, S) == pytest.approx(oracle_value(entries, S, list(aff)), abs=1e-12)

    def test_supply(self):
        assert total_supply(_mat({0: {}}, {"u": {"p"}})) == 0.0
        m = _mat({0: {"u": 0.5, "v": 0.5}}, {"u": {"p"}, "v": {"p"}})
        assert total_supply(m) == pytest.approx(1.0)
        rng = np.random.default_rng(3)
        entries, aff, products = random_entries(rng, 6, 7, 2)
        m = make_matrix(entries, aff, products)
        assert total_supply(m) == pytest.approx(sum(oracle_value(entries, [s], list(aff)) for s in range(6)))
        assert total_supply(m) == pytest.approx(sum(p for row in entries.values() for p in row.values()))


class TestMarginalGain:
    def test_zero_for_unrelated_slot(self):
        m = _mat({0: {"u": 0.5}, 1: {"v": 0.9}}, {"u": {"a"}, "v": {"b"}})
        assert marginal_gain(m, [], 1, "a") == 0.0

    def test_empty_base(self):
        m = _mat({0: {"u": 0.5, "v": 0.3}, 1: {"v": 0.9}}, {"u": {"a"}, "v": {"a"}})
        assert marginal_gain(m, [], 0, "a") == pytest.approx(product_influence(m, [0], "a"))

    def test_member_rejected(self):
        m = _mat({0: {"u": 0.5}}, {"u": {"a"}})
        with pytest.raises(ValueError):
            marginal_gain(m, [0], 0, "a")

    def test_matches_scratch_on_random_pairs(self, rng):
        for _ in range(50):
            entries, aff, products = random_entries(rng, 6, 6, 2)
            m = make_matrix(entries, aff, products)
            S = [s for s in range(6) if rng.random() < 0.4]
            rest = [s for s in range(6) if s not in S]
            if not rest:
                continue
            e = int(rng.choice(rest))
            for j in products:
                users = oracle_product_users(aff, j)
                want = oracle_value(entries, S + [e], users) - oracle_value(entries, S, users)
                assert marginal_gain(m, S, e, j) == pytest.approx(want, abs=1e-9)

    def test_vector_gains_match_scalar(self, rng):
        entries, aff, products = random_entries(rng, 8, 10, 3)
        m = make_matrix(entries, aff, products)
        cov = Coverage(m, m.product_weights(products[0]), [1, 4])
        g = cov.gains()
        for s in range(8):
            assert g[s] == (0.0 if s in (1, 4) else pytest.approx(cov.gain(s), abs=1e-12))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_monotone_and_submodular(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    entries, aff, products = random_entries(rng, n, int(rng.integers(1, 6)), 2)
    m = make_matrix(entries, aff, products)
    T = [s for s in range(n) if rng.random() < 0.6]
    S = [s for s in T if rng.random() < 0.5]
    outside = [s for s in range(n) if s not in T]
    assert influence(m, S) <= influence(m, T) + 1e-12
    assert 0 <= influence(m, T) <= m.n_users + 1e-12
    for j in products:
        assert product_influence(m, S, j) <= product_influence(m, T, j) + 1e-12
        for e in outside:
            assert marginal_gain(m, S, e, j) >= marginal_gain(m, T, e, j) - 1e-9


class TestSparsity:
    def test_distinct_products(self):
        m = _mat({0: {"u": 0.5, "v": 0.5}, 1: {"u": 0.2}}, {"u": {"1", "2"}, "v": {"2", "3"}})
        assert sparsity(m) == 3

    def test_single_product(self):
        m = _mat({0: {"u": 0.5}, 1: {"v": 1.0}}, {"u": {"a"}, "v": {"a"}})
        assert sparsity(m) == 1

    def test_no_entries(self):
        assert sparsity(_mat({0: {}, 1: {}}, {"u": {"a"}})) == 0


def test_rejects_bad_probabilities():
    with pytest.raises(ValidationError):
        InfluenceMatrix.from_entries(1, {0: {"u": 1.5}}, {"u": set()})


def test_dump(tmp_path):
    m = _mat({0: {"u": 0.5}, 1: {"v": 0.25, "u": 1.0}}, {"u": {"a"}, "v": {"a"}})
    m.dump(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines == ["slot_id,user,probability", "0,u,0.5", "1,u,1.0", "1,v,0.25"]
