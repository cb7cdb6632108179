"""Discrete-time continuous greedy over cardinality and knapsack polytopes."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .influence import InfluenceMatrix
from .model import ValidationError
from .multilinear import lifted_weights, multilinear_value


@dataclass(frozen=True)
class Polytope:
    """``{x in [0,1]^n : sum x <= cap}`` or ``{x in [0,1]^n : costs . x <= budget}``."""

    kind: str
    cap: int | None = None
    costs: np.ndarray | None = None
    budget: float | None = None

    def __post_init__(self):
        if self.kind == "cardinality":
            if self.cap is None or self.cap < 0:
                raise ValidationError("cardinality polytope needs cap >= 0")
        elif self.kind == "knapsack":
            if self.costs is None or self.budget is None or self.budget < 0:
                raise ValidationError("knapsack polytope needs costs and budget >= 0")
            if np.any(np.asarray(self.costs) <= 0):
                raise ValidationError("knapsack costs must be positive")
        else:
            raise ValidationError(f"unsupported polytope kind {self.kind!r}")

    @classmethod
    def cardinality(cls, cap: int) -> "Polytope":
        return cls("cardinality", cap=int(cap))

    @classmethod
    def knapsack(cls, costs, budget: float) -> "Polytope":
        return cls("knapsack", costs=np.asarray(costs, dtype=float), budget=float(budget))

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        if self.kind == "cardinality":
            return x.sum() <= self.cap + tol
        return float(self.costs @ x) <= self.budget * (1 + tol) + tol


@dataclass
class GreedyTrace:
    steps: list[tuple[float, int, float]] = field(default_factory=list)
    final: np.ndarray | None = None

    def dump(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "F", "support"))
            for t, support, value in self.steps:
                w.writerow((repr(t), repr(value), support))


def lp_direction(weights: np.ndarray, polytope: Polytope) -> np.ndarray:
    """A vertex of the polytope maximizing ``x . weights``.

    Only positive weights are taken; ties go to the lowest slot id.
    """
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite")
    x = np.zeros(len(w))
    positive = np.flatnonzero(w > 0)
    if polytope.kind == "cardinality":
        order = positive[np.argsort(-w[positive], kind="stable")]
        x[order[:polytope.cap]] = 1.0
        return x
    costs = polytope.costs
    if len(costs) != len(w):
        raise ValidationError("weights and costs differ in length")
    order = positive[np.argsort(-(w[positive] / costs[positive]), kind="stable")]
    room = polytope.budget
    for e in order:
        if room <= 0:
            break
        take = min(1.0, room / costs[e])
        x[e] = take
        room -= take * costs[e]
    return x


def default_step(n: int, T: float = 1.0) -> float:
    return T / math.ceil(n * T * 10)


def theory_step(n: int, T: float = 1.0) -> float:
    """``T / ceil(n^5 T)``; only usable for tiny ground sets."""
    return T / math.ceil(n ** 5 * T)


def continuous_greedy(matrix: InfluenceMatrix, polytope: Polytope, weights: np.ndarray, T: float = 1.0,
                      step: float | None = None, trace: bool = True) -> tuple[np.ndarray, GreedyTrace]:
    """Ascend the multilinear extension of the weighted coverage ``weights``.

    Each step moves ``y_e += step * d_e * (1 - y_e)`` along the LP-optimal
    direction ``d`` for the lifted weights ``F(y v 1_e) - F(y)``. Runs
    ``T / step`` steps, which must be an integer.
    """
    n = matrix.n_slots
    if T <= 0:
        raise ValidationError("T must be positive")
    if step is None:
        step = default_step(n, T)
    n_steps = round(T / step)
    if n_steps < 1 or abs(n_steps * step - T) > 1e-9 * T:
        raise ValidationError(f"step {step} does not divide T = {T}")
    weights = np.asarray(weights, dtype=float)
    y = np.zeros(n)
    out = GreedyTrace()
    value = multilinear_value(matrix, y, weights)
    if trace:
        out.steps.append((0.0, 0, value))
    for i in range(1, n_steps + 1):
        d = lp_direction(lifted_weights(matrix, y, weights), polytope)
        y = y + step * d * (1.0 - y)
        if trace:
            value = multilinear_value(matrix, y, weights)
            out.steps.append((i * step, int(np.count_nonzero(d)), value))
    np.clip(y, 0.0, 1.0, out=y)
    out.final = y
    return y, out
