"""Domain types and delimited-text ingestion for trajectory and billboard data.

Files are comma-separated with a one-line header, UTF-8, integer epoch seconds:

    trajectories  user,lat,lon,start,end,affinities     (affinities: ``a;b;c``)
    billboards    billboard_id,lat,lon,size
    costs         slot_id,cost
    products      product_id,demand,threshold,budget
"""
from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EARTH_RADIUS_M = 6_371_008.8

TRAJECTORY_HEADER = ("user", "lat", "lon", "start", "end", "affinities")
BILLBOARD_HEADER = ("billboard_id", "lat", "lon", "size")
COST_HEADER = ("slot_id", "cost")
PRODUCT_HEADER = ("product_id", "demand", "threshold", "budget")


class ParseError(ValueError):
    """A row of an input file could not be parsed."""

    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class ValidationError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """Raised when a demand can never be met by the available slots."""


@dataclass(frozen=True)
class TimeInterval:
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f"interval start {self.start} must be < end {self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "TimeInterval") -> bool:
        # positive-length overlap only; touching endpoints do not count
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class TrajectoryRecord:
    user: str
    location: tuple[float, float]
    interval: TimeInterval
    affinities: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Billboard:
    billboard_id: str
    location: tuple[float, float]
    size: float = 1.0

    def __post_init__(self):
        if not self.size > 0:
            raise ValidationError(f"billboard {self.billboard_id}: size must be > 0, got {self.size}")


@dataclass(frozen=True)
class BillboardSlot:
    slot_id: int
    billboard: str
    interval: TimeInterval


class SlotUniverse:
    """The ground set of (billboard, window) slots over a horizon.

    Slots are numbered billboard-major: ``slot_id = b * windows + w``. Slot
    objects are built on demand, so a universe of a few million slots costs
    only the billboard list.
    """

    def __init__(self, billboards: Sequence[Billboard], horizon: tuple[int, int], slot_duration: int):
        t1, t2 = int(horizon[0]), int(horizon[1])
        if slot_duration <= 0:
            raise ValidationError("slot duration must be positive")
        if t2 <= t1:
            raise ValidationError(f"empty horizon ({t1}, {t2})")
        if (t2 - t1) % slot_duration:
            raise ValidationError(
                f"slot duration {slot_duration} does not divide horizon length {t2 - t1}"
            )
        ids = [b.billboard_id for b in billboards]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate billboard ids")
        self.billboards = tuple(billboards)
        self.horizon = (t1, t2)
        self.slot_duration = int(slot_duration)
        self.windows = (t2 - t1) // slot_duration
        self._index = {bid: i for i, bid in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.billboards) * self.windows

    def __getitem__(self, slot_id: int) -> BillboardSlot:
        b, w = self.locate(slot_id)
        start = self.horizon[0] + w * self.slot_duration
        return BillboardSlot(slot_id, self.billboards[b].billboard_id,
                             TimeInterval(start, start + self.slot_duration))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def slots(self) -> Sequence[BillboardSlot]:
        return self

    def locate(self, slot_id: int) -> tuple[int, int]:
        """(billboard index, window index) of a slot."""
        if not 0 <= slot_id < len(self):
            raise IndexError(f"slot id {slot_id} outside [0, {len(self)})")
        return divmod(int(slot_id), self.windows)

    def slot_id(self, billboard_id: str, window: int) -> int:
        return self._index[billboard_id] * self.windows + window

    def billboard_index(self, billboard_id: str) -> int:
        return self._index[billboard_id]

    def window_range(self, start: int, end: int) -> range:
        """Windows having positive overlap with ``[start, end]``."""
        t1 = self.horizon[0]
        lo = max(0, (start - t1) // self.slot_duration)
        hi = min(self.windows, -((t1 - end) // self.slot_duration))
        return range(lo, hi)

    def slot_billboards(self) -> np.ndarray:
        """Billboard index of every slot, as an array."""
        return np.repeat(np.arange(len(self.billboards)), self.windows)

    def __repr__(self):
        return (f"SlotUniverse(billboards={len(self.billboards)}, horizon={self.horizon}, "
                f"slot_duration={self.slot_duration}, slots={len(self)})")


@dataclass(frozen=True)
class CostTable:
    cost: np.ndarray
    total_cost: float = field(init=False)

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=float)
        if cost.ndim != 1:
            raise ValidationError("cost table must be one-dimensional")
        if np.any(~np.isfinite(cost)) or np.any(cost <= 0):
            raise ValidationError("all slot costs must be positive and finite")
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "total_cost", float(cost.sum()))

    def __len__(self):
        return len(self.cost)

    def __getitem__(self, slot_id):
        return self.cost[slot_id]

    def of(self, slots: Iterable[int]) -> float:
        return float(sum(self.cost[s] for s in slots))


@dataclass(frozen=True)
class ProductSpec:
    product_id: str
    demand: float = 0.0
    threshold: float = 0.0
    budget: float = 0.0

    def __post_init__(self):
        for name in ("demand", "threshold", "budget"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValidationError(f"product {self.product_id}: {name} must be >= 0, got {v}")


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; broadcasts over numpy arrays."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


# ---------------------------------------------------------------------------
# slots and horizon


def trajectory_horizon(records: Sequence[TrajectoryRecord], slot_duration: int | None = None) -> tuple[int, int]:
    """(min start, max end) of the records, rounded outward to multiples of ``slot_duration``."""
    if not records:
        raise ValidationError("horizon undefined for an empty trajectory database")
    t1 = min(r.interval.start for r in records)
    t2 = max(r.interval.end for r in records)
    if slot_duration:
        t1 = (t1 // slot_duration) * slot_duration
        t2 = -((-t2) // slot_duration) * slot_duration
    return t1, t2


def derive_slots(billboards: Sequence[Billboard], horizon: tuple[int, int], slot_duration: int) -> SlotUniverse:
    return SlotUniverse(billboards, horizon, slot_duration)


def validate_instance(universe: SlotUniverse, costs: CostTable, products: Sequence[ProductSpec],
                      product_users: dict | None = None) -> list[str]:
    """Return a list of findings; an empty list means the instance is consistent.

    ``product_users`` maps product id to its relevant users (e.g.
    ``InfluenceMatrix.per_product_users``); when given, products with a positive
    demand but no relevant users are reported.
    """
    findings = []
    n = len(universe)
    if len(costs) < n:
        findings.append(f"missing costs for slots {len(costs)}..{n - 1}")
    elif len(costs) > n:
        findings.append(f"cost table has {len(costs) - n} entries beyond the last slot")
    ids = [p.product_id for p in products]
    for pid in sorted({p for p in ids if ids.count(p) > 1}):
        findings.append(f"duplicate product id {pid}")
    if product_users is not None:
        for p in products:
            if not product_users.get(p.product_id) and (p.demand > 0 or p.threshold > 0):
                findings.append(
                    f"product {p.product_id} has no relevant users but positive demand (infeasible)"
                )
    return findings


# ---------------------------------------------------------------------------
# delimited text I/O


def _rows(path, header, delimiter):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        first = next(reader, None)
        if first is None:
            return
        got = tuple(c.strip() for c in first)
        if got != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}, got {','.join(got)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            yield lineno, [c.strip() for c in row]


def _int(path, lineno, text, name):
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, lineno, f"{name} is not an integer: {text!r}") from None


def _float(path, lineno, text, name):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(path, lineno, f"{name} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(path, lineno, f"{name} is not finite: {text!r}")
    return v


def load_trajectories(path, products: Iterable[str] | None = None, delimiter: str = ",") -> list[TrajectoryRecord]:
    """Read a trajectory file; ``products`` (if given) restricts the allowed affinity ids."""
    known = None if products is None else set(products)
    records = []
    for lineno, (user, lat, lon, start, end, aff) in _rows(path, TRAJECTORY_HEADER, delimiter):
        affinities = frozenset(a.strip() for a in aff.split(";") if a.strip())
        if known is not None and not affinities <= known:
            raise ParseError(path, lineno, f"unknown products {sorted(affinities - known)}")
        t0, t1 = _int(path, lineno, start, "start"), _int(path, lineno, end, "end")
        if t0 >= t1:
            raise ParseError(path, lineno, f"interval start {t0} >= end {t1}")
        records.append(TrajectoryRecord(
            user, (_float(path, lineno, lat, "lat"), _float(path, lineno, lon, "lon")),
            TimeInterval(t0, t1), affinities))
    return records


def save_trajectories(path, records: Iterable[TrajectoryRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for r in records:
            w.writerow([r.user, repr(r.location[0]), repr(r.location[1]),
                        r.interval.start, r.interval.end, ";".join(sorted(r.affinities))])


def load_billboards(path, delimiter: str = ",") -> list[Billboard]:
    out = []
    for lineno, (bid, lat, lon, size) in _rows(path, BILLBOARD_HEADER, delimiter):
        s = _float(path, lineno, size, "size")
        if s <= 0:
            raise ParseError(path, lineno, f"size must be > 0, got {s}")
        out.append(Billboard(bid, (_float(path, lineno, lat, "lat"), _float(path, lineno, lon, "lon")), s))
    return out


def save_billboards(path, billboards: Iterable[Billboard]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BILLBOARD_HEADER)
        for b in billboards:
            w.writerow([b.billboard_id, repr(b.location[0]), repr(b.location[1]), repr(b.size)])


def load_costs(path, n_slots: int | None = None, delimiter: str = ",") -> CostTable:
    pairs = {}
    for lineno, (sid, cost) in _rows(path, COST_HEADER, delimiter):
        s = _int(path, lineno, sid, "slot_id")
        if s < 0 or s in pairs:
            raise ParseError(path, lineno, f"invalid or duplicate slot id {s}")
        pairs[s] = _float(path, lineno, cost, "cost")
    n = n_slots if n_slots is not None else (max(pairs) + 1 if pairs else 0)
    missing = [s for s in range(n) if s not in pairs]
    if missing:
        raise ValidationError(f"{path}: no cost for {len(missing)} slots (first: {missing[0]})")
    return CostTable(np.array([pairs[s] for s in range(n)], dtype=float))


def save_costs(path, costs: CostTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COST_HEADER)
        for s, c in enumerate(costs.cost):
            w.writerow([s, repr(float(c))])


def load_products(path, delimiter: str = ",") -> list[ProductSpec]:
    out = []
    for lineno, (pid, demand, threshold, budget) in _rows(path, PRODUCT_HEADER, delimiter):
        try:
            out.append(ProductSpec(pid, _float(path, lineno, demand, "demand"),
                                   _float(path, lineno, threshold, "threshold"),
                                   _float(path, lineno, budget, "budget")))
        except ValidationError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return out


def save_products(path, products: Iterable[ProductSpec]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRODUCT_HEADER)
        for p in products:
            w.writerow([p.product_id, repr(float(p.demand)), repr(float(p.threshold)), repr(float(p.budget))])


def product_ids_of(records: Iterable[TrajectoryRecord]) -> list[str]:
    return sorted(set().union(*(r.affinities for r in records)))
