"""Isolation forest built from scratch.

Anomalies are isolated by random axis-aligned cuts in fewer steps than normal
points, so short expected path lengths mean high anomaly scores:

    s(x) = 2 ** (-E[h(x)] / c(psi))

with c(n) = 2*(ln(n-1) + gamma) - 2*(n-1)/n for n > 2, c(2) = 1, c(n<=1) = 0,
the expected unsuccessful-search path length in a random binary search tree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import ContractError
from ..rng import derive_rng

EULER_GAMMA = 0.5772156649


def c_factor(n: int) -> float:
    """Average path length of an unsuccessful BST search over n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


@dataclass(slots=True)
class TreeNode:
    """Internal split node: rows with feature < value go left."""

    feature: int
    value: float
    left: "TreeNode | Leaf"
    right: "TreeNode | Leaf"


@dataclass(slots=True)
class Leaf:
    size: int


def _build_tree(
    rows: np.ndarray, idx: np.ndarray, depth: int, limit: int, rng: np.random.Generator
) -> TreeNode | Leaf:
    size = idx.shape[0]
    if size <= 1 or depth >= limit:
        return Leaf(size)
    sub = rows[idx]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:
        return Leaf(size)
    feature = int(splittable[rng.integers(splittable.size)])
    value = float(rng.uniform(lo[feature], hi[feature]))
    mask = sub[:, feature] < value
    return TreeNode(
        feature=feature,
        value=value,
        left=_build_tree(rows, idx[mask], depth + 1, limit, rng),
        right=_build_tree(rows, idx[~mask], depth + 1, limit, rng),
    )


@dataclass(slots=True)
class IsolationForestModel:
    trees: list[TreeNode | Leaf]
    n_estimators: int
    max_samples_fraction: float
    contamination: float
    score_threshold: float
    feature_count: int
    subsample_size: int
    rng_seed: int = 0
    degenerate: bool = field(default=False)


def _path_lengths(node: TreeNode | Leaf, rows: np.ndarray, idx: np.ndarray,
                  depth: int, out: np.ndarray) -> None:
    if isinstance(node, Leaf):
        out[idx] = depth + c_factor(node.size)
        return
    mask = rows[idx, node.feature] < node.value
    _path_lengths(node.left, rows, idx[mask], depth + 1, out)
    _path_lengths(node.right, rows, idx[~mask], depth + 1, out)


def iforest_score_many(model: IsolationForestModel, rows: np.ndarray) -> np.ndarray:
    """Anomaly scores in (0, 1) for a batch of rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != model.feature_count:
        raise ContractError(
            f"expected rows with {model.feature_count} feature(s), got shape {rows.shape}"
        )
    total = np.zeros(rows.shape[0])
    lengths = np.empty(rows.shape[0])
    all_idx = np.arange(rows.shape[0])
    for tree in model.trees:
        _path_lengths(tree, rows, all_idx, 0, lengths)
        total += lengths
    mean_depth = total / len(model.trees)
    return np.power(2.0, -mean_depth / c_factor(model.subsample_size))


def iforest_fit(
    rows: np.ndarray,
    n_estimators: int = 100,
    max_samples_fraction: float = 1.0,
    contamination: float = 0.05,
    rng_seed: int = 0,
) -> IsolationForestModel:
    """Fit ``n_estimators`` isolation trees on uniform subsamples of the rows.

    Each tree is grown from its own derived seed, so construction is
    reproducible regardless of evaluation order.  The decision threshold is
    the (1 - contamination) quantile of the training scores.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1)
    if rows.size == 0:
        raise ContractError("iforest_fit needs a non-empty feature matrix")
    if not 0.0 < max_samples_fraction <= 1.0:
        raise ContractError("max_samples_fraction must be in (0, 1]")
    if not 0.0 < contamination < 0.5:
        raise ContractError("contamination must be in (0, 0.5)")
    n = rows.shape[0]
    psi = max(2, min(n, round(max_samples_fraction * n)))
    limit = math.ceil(math.log2(psi))
    trees: list[TreeNode | Leaf] = []
    for t in range(n_estimators):
        rng = derive_rng(rng_seed, "iforest-tree", t)
        sample_idx = rng.choice(n, size=psi, replace=False) if psi < n else np.arange(n)
        trees.append(_build_tree(rows, np.asarray(sample_idx), 0, limit, rng))
    model = IsolationForestModel(
        trees=trees,
        n_estimators=n_estimators,
        max_samples_fraction=max_samples_fraction,
        contamination=contamination,
        score_threshold=0.0,
        feature_count=rows.shape[1],
        subsample_size=psi,
        rng_seed=rng_seed,
    )
    scores = iforest_score_many(model, rows)
    model.score_threshold = float(np.quantile(scores, 1.0 - contamination))
    if float(scores.min()) == float(scores.max()):
        model.degenerate = True
        warnings.warn(
            "all training rows scored identically; the anomaly threshold is degenerate",
            stacklevel=2,
        )
    return model


def iforest_score(model: IsolationForestModel, row: np.ndarray) -> float:
    return float(iforest_score_many(model, np.asarray(row, dtype=float).reshape(1, -1))[0])


def iforest_classify(model: IsolationForestModel, row: np.ndarray) -> bool:
    """True for anomaly: score strictly above the fitted threshold."""
    return iforest_score(model, row) > model.score_threshold


def iforest_classify_many(model: IsolationForestModel, rows: np.ndarray) -> np.ndarray:
    return iforest_score_many(model, rows) > model.score_threshold
