"""Multilinear extension of the coverage influence functions.

For a coverage function the extension factorizes per user,

    F(x) = sum_u w_u * (1 - prod_s (1 - x_s * Pr(s, u))),

so it can be evaluated exactly; the Monte-Carlo estimator samples random sets
and exists to cross-check that closed form.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from .influence import InfluenceMatrix, product_influence
from .model import ValidationError

MC_BATCH = 1024


def as_point(x, n: int) -> np.ndarray:
    """Coerce ``x`` (array or ``{slot: value}``) to a dense point in ``[0, 1]^n``."""
    if isinstance(x, Mapping):
        dense = np.zeros(n)
        for s, v in x.items():
            dense[int(s)] = v
        x = dense
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValidationError(f"point has shape {x.shape}, expected ({n},)")
    if np.any(x < 0) or np.any(x > 1) or np.any(np.isnan(x)):
        raise ValidationError("point coordinates must lie in [0, 1]")
    return x


def indicator(slots, n: int) -> np.ndarray:
    x = np.zeros(n)
    x[list(slots)] = 1.0
    return x


def survival(matrix: InfluenceMatrix, x: np.ndarray) -> np.ndarray:
    """Per-user probability of not being influenced when slot s is picked w.p. x_s."""
    P = matrix.P
    factors = 1.0 - x[matrix._entry_rows] * P.data
    surv = np.ones(matrix.n_users)
    np.multiply.at(surv, P.indices, factors)
    return surv


def multilinear_value(matrix: InfluenceMatrix, x, weights: np.ndarray) -> float:
    x = as_point(x, matrix.n_slots)
    return float(np.asarray(weights, dtype=float) @ (1.0 - survival(matrix, x)))


def F_exact(matrix: InfluenceMatrix, x, product: str, scale: float = 1.0) -> float:
    """Closed-form extension of the product influence, divided by ``scale``."""
    if not scale > 0:
        raise ValidationError("scale must be positive")
    return multilinear_value(matrix, x, matrix.product_weights(product)) / scale


def _sample_values(matrix, x, weights, n, rng):
    """Set-function values of ``n`` random sets drawn with inclusion probabilities ``x``."""
    P = matrix.P
    certain = P.data >= 1.0
    logs = np.where(certain, 0.0, np.log1p(-np.where(certain, 0.0, P.data)))
    L = P.copy()
    L.data = logs
    C = P.copy()
    C.data = certain.astype(float)
    Z = (rng.random((n, matrix.n_slots)) < x).astype(float)
    log_surv = np.asarray((L.T @ Z.T).T)
    hit = np.asarray((C.T @ Z.T).T) > 0
    surv = np.where(hit, 0.0, np.exp(log_surv))
    return (1.0 - surv) @ weights


def F_mc(matrix: InfluenceMatrix, x, product: str, scale: float = 1.0, samples: int = 1000,
         seed=None) -> tuple[float, float]:
    """Monte-Carlo estimate of :func:`F_exact` and its standard error.

    Samples are drawn in fixed-size batches, each with its own child seed, so
    the result depends only on ``(seed, samples)``.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if not scale > 0:
        raise ValidationError("scale must be positive")
    x = as_point(x, matrix.n_slots)
    weights = matrix.product_weights(product) / scale
    n_batches = -(-samples // MC_BATCH)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    vals = []
    for b, child in enumerate(children):
        n = min(MC_BATCH, samples - b * MC_BATCH)
        vals.append(_sample_values(matrix, x, weights, n, np.random.default_rng(child)))
    vals = np.concatenate(vals)
    if samples == 1 or vals.min() == vals.max():
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))


def product_scales(matrix: InfluenceMatrix, products: Sequence[str] | None = None) -> dict[str, float]:
    """Influence of the whole ground set for each product."""
    everything = range(matrix.n_slots)
    return {p: product_influence(matrix, everything, p) for p in (products or matrix.products)}


def aggregate_weights(matrix: InfluenceMatrix, scales: Mapping[str, float]) -> np.ndarray:
    """User weights of ``sum_j I_j / scale_j``; products with a zero scale are skipped."""
    w = np.zeros(matrix.n_users)
    for p, scale in scales.items():
        if scale > 0:
            w += matrix.product_weights(p) / scale
    return w


def lifted_weight(matrix: InfluenceMatrix, y, e: int, weights: np.ndarray) -> float:
    """``F(y v 1_e) - F(y)`` for one slot."""
    y = as_point(y, matrix.n_slots)
    raised = y.copy()
    raised[e] = 1.0
    return multilinear_value(matrix, raised, weights) - multilinear_value(matrix, y, weights)


def lifted_weights(matrix: InfluenceMatrix, y: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``F(y v 1_e) - F(y)`` for every slot at once.

    Raising ``y_e`` to 1 changes user u's survival from ``surv_u`` to
    ``surv_u * (1 - p) / (1 - y_e p)``, so the gain per entry is
    ``w_u * surv_u * p * (1 - y_e) / (1 - y_e p)``.
    """
    P = matrix.P
    rows = matrix._entry_rows
    ye = y[rows]
    surv = survival(matrix, y)
    denom = 1.0 - ye * P.data
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = np.where(denom > 0, weights[P.indices] * surv[P.indices] * P.data * (1.0 - ye) / denom, 0.0)
    return np.bincount(rows, weights=contrib, minlength=matrix.n_slots)
