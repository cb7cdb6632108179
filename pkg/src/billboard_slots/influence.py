"""Slot-to-user influence probabilities and the coverage-type influence functions.

The influence of a slot set ``S`` on a weighted user population is

    sum_u  w_u * (1 - prod_{s in S} (1 - Pr(s, u)))

With ``w_u = 1`` this is the plain expected number of influenced users; with
``w_u = [u relevant to product j]`` it is the product-specific influence.
Every evaluation in the package goes through :class:`InfluenceMatrix`.
"""
from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .model import (SlotUniverse, TrajectoryRecord, ValidationError, haversine_m)


class InfluenceMatrix:
    """Sparse ``slots x users`` matrix of influence probabilities.

    Zero probabilities are never stored. Users and products are kept in sorted
    order; ``product_masks[k, i]`` says whether user ``users[i]`` is relevant
    to product ``products[k]``.
    """

    def __init__(self, probs: sparse.spmatrix, users: Sequence[str], affinities: Mapping[str, Iterable[str]],
                 products: Sequence[str] | None = None, max_size: float = 1.0):
        P = sparse.csr_matrix(probs, dtype=float)
        P.eliminate_zeros()
        P.sum_duplicates()
        P.sort_indices()
        if P.shape[1] != len(users):
            raise ValidationError(f"matrix has {P.shape[1]} user columns, {len(users)} users given")
        if P.nnz and (P.data.min() <= 0 or P.data.max() > 1):
            raise ValidationError("influence probabilities must lie in (0, 1]")
        self.P = P
        self.users = tuple(users)
        aff = {u: frozenset(affinities.get(u, ())) for u in self.users}
        if products is None:
            products = sorted(set().union(*aff.values())) if aff else []
        self.products = tuple(products)
        self._product_index = {p: k for k, p in enumerate(self.products)}
        masks = np.zeros((len(self.products), len(self.users)), dtype=bool)
        for i, u in enumerate(self.users):
            for p in aff[u]:
                if p not in self._product_index:
                    raise ValidationError(f"user {u} has unknown product affinity {p}")
                masks[self._product_index[p], i] = True
        masks.setflags(write=False)
        self.product_masks = masks
        self.max_size = float(max_size)
        self._entry_rows = np.repeat(np.arange(P.shape[0]), np.diff(P.indptr))

    @classmethod
    def from_entries(cls, n_slots: int, entries, affinities: Mapping[str, Iterable[str]],
                     products: Sequence[str] | None = None, users: Sequence[str] | None = None,
                     max_size: float = 1.0) -> "InfluenceMatrix":
        """Build from ``{slot: {user: prob}}`` or an iterable of ``(slot, user, prob)``."""
        if isinstance(entries, Mapping):
            entries = [(s, u, p) for s, row in entries.items() for u, p in row.items()]
        entries = [(int(s), u, float(p)) for s, u, p in entries if p != 0]
        if users is None:
            users = sorted(set(affinities) | {u for _, u, _ in entries})
        col = {u: i for i, u in enumerate(users)}
        rows = [s for s, _, _ in entries]
        if rows and not (0 <= min(rows) and max(rows) < n_slots):
            raise ValidationError("entry slot id outside the universe")
        P = sparse.coo_matrix(([p for *_, p in entries], (rows, [col[u] for _, u, _ in entries])),
                              shape=(n_slots, len(users)))
        if len({(s, u) for s, u, _ in entries}) != len(entries):
            raise ValidationError("duplicate (slot, user) entries")
        return cls(P, users, affinities, products, max_size)

    # -- shape and lookups

    @property
    def n_slots(self) -> int:
        return self.P.shape[0]

    @property
    def n_users(self) -> int:
        return self.P.shape[1]

    def row(self, slot: int) -> tuple[np.ndarray, np.ndarray]:
        """(user column indices, probabilities) stored for ``slot``."""
        a, b = self.P.indptr[slot], self.P.indptr[slot + 1]
        return self.P.indices[a:b], self.P.data[a:b]

    def entries(self, slot: int) -> list[tuple[str, float]]:
        cols, probs = self.row(slot)
        return [(self.users[c], float(p)) for c, p in zip(cols, probs)]

    def product_index(self, product: str) -> int:
        try:
            return self._product_index[product]
        except KeyError:
            raise KeyError(f"unknown product {product!r}") from None

    @property
    def per_product_users(self) -> dict[str, frozenset[str]]:
        return {p: frozenset(np.asarray(self.users, dtype=object)[self.product_masks[k]])
                for k, p in enumerate(self.products)}

    def product_weights(self, product: str) -> np.ndarray:
        return self.product_masks[self.product_index(product)].astype(float)

    def all_weights(self) -> np.ndarray:
        return np.ones(self.n_users)

    def dump(self, path) -> None:
        """Write ``slot_id,user,probability`` rows for debugging."""
        coo = self.P.tocoo()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("slot_id", "user", "probability"))
            for s, c, p in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
                w.writerow((s, self.users[c], repr(p)))

    def __repr__(self):
        return (f"InfluenceMatrix(slots={self.n_slots}, users={self.n_users}, "
                f"products={len(self.products)}, nnz={self.P.nnz})")


class Coverage:
    """Incremental evaluator of a weighted coverage function.

    Keeps the per-user survival product ``prod_{s in S}(1 - Pr(s, u))`` so a
    marginal gain costs O(entries of the slot).
    """

    def __init__(self, matrix: InfluenceMatrix, weights: np.ndarray, slots: Iterable[int] = ()):
        self.matrix = matrix
        self.weights = np.asarray(weights, dtype=float)
        self.survival = np.ones(matrix.n_users)
        self.members: set[int] = set()
        for s in slots:
            self.add(s)

    def value(self) -> float:
        return float(self.weights @ (1.0 - self.survival))

    def gain(self, slot: int) -> float:
        if slot in self.members:
            raise ValueError(f"slot {slot} is already in the set")
        cols, probs = self.matrix.row(slot)
        return float(np.dot(self.weights[cols] * self.survival[cols], probs))

    def gains(self) -> np.ndarray:
        """Marginal gain of every slot; members get 0."""
        P = self.matrix.P
        contrib = (self.weights * self.survival)[P.indices] * P.data
        g = np.bincount(self.matrix._entry_rows, weights=contrib, minlength=self.matrix.n_slots)
        if self.members:
            g[list(self.members)] = 0.0
        return g

    def add(self, slot: int) -> None:
        if slot in self.members:
            return
        cols, probs = self.matrix.row(slot)
        self.survival[cols] *= 1.0 - probs
        self.members.add(int(slot))


def _check_slots(matrix, S):
    S = {int(s) for s in S}
    if S and not (min(S) >= 0 and max(S) < matrix.n_slots):
        raise ValidationError("slot set contains ids outside the universe")
    return S


def weighted_influence(matrix: InfluenceMatrix, S: Iterable[int], weights: np.ndarray) -> float:
    return Coverage(matrix, weights, _check_slots(matrix, S)).value()


def influence(matrix: InfluenceMatrix, S: Iterable[int]) -> float:
    """Expected number of influenced users over all users."""
    return weighted_influence(matrix, S, matrix.all_weights())


def product_influence(matrix: InfluenceMatrix, S: Iterable[int], product: str) -> float:
    """Expected number of influenced users relevant to ``product``."""
    return weighted_influence(matrix, S, matrix.product_weights(product))


def marginal_gain(matrix: InfluenceMatrix, S: Iterable[int], e: int, product: str) -> float:
    S = _check_slots(matrix, S)
    if e in S:
        raise ValueError(f"slot {e} is already in S")
    return Coverage(matrix, matrix.product_weights(product), S).gain(e)


def singleton_influence(matrix: InfluenceMatrix) -> np.ndarray:
    """Influence of every slot on its own (row sums, since |S| = 1 is linear)."""
    return np.asarray(matrix.P.sum(axis=1)).ravel()


def total_supply(matrix: InfluenceMatrix) -> float:
    return float(singleton_influence(matrix).sum())


def sparsity(matrix: InfluenceMatrix) -> int:
    """Largest number of distinct products any single slot reaches."""
    if matrix.P.nnz == 0 or not matrix.products:
        return 0
    reach = (matrix.P > 0).astype(float) @ matrix.product_masks.T.astype(float)
    return int((np.asarray(reach) > 0).sum(axis=1).max())


def build_influence_matrix(records: Sequence[TrajectoryRecord], universe: SlotUniverse, lambda_m: float,
                           products: Sequence[str] | None = None, chunk: int = 4096) -> InfluenceMatrix:
    """Link users to the slots they pass within ``lambda_m`` meters of, during the slot window.

    Probability of an entry is the billboard's size over the largest size.
    """
    if lambda_m <= 0:
        raise ValidationError("lambda must be positive")
    if len(universe) == 0:
        raise ValidationError("empty slot universe")
    bb = universe.billboards
    blat = np.array([b.location[0] for b in bb])
    blon = np.array([b.location[1] for b in bb])
    sizes = np.array([b.size for b in bb])
    max_size = float(sizes.max())

    users = sorted({r.user for r in records})
    col = {u: i for i, u in enumerate(users)}
    affinities: dict[str, set] = {u: set() for u in users}
    for r in records:
        affinities[r.user] |= r.affinities

    rlat = np.array([r.location[0] for r in records])
    rlon = np.array([r.location[1] for r in records])
    pairs = set()
    for lo in range(0, len(records), chunk):
        d = haversine_m(rlat[lo:lo + chunk, None], rlon[lo:lo + chunk, None], blat[None, :], blon[None, :])
        for i, b in zip(*np.nonzero(d <= lambda_m)):
            r = records[lo + i]
            c = col[r.user]
            for w in universe.window_range(r.interval.start, r.interval.end):
                pairs.add((b * universe.windows + w, c))
    if pairs:
        rows, cols = map(np.array, zip(*sorted(pairs)))
    else:
        rows = cols = np.array([], dtype=int)
    probs = sizes[rows // universe.windows] / max_size if len(rows) else np.array([])
    P = sparse.csr_matrix((probs, (rows, cols)), shape=(len(universe), len(users)))
    return InfluenceMatrix(P, users, affinities, products, max_size)
