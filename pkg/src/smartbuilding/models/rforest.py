"""Random-forest occupancy classifier built from scratch.

Each tree is grown on a bootstrap sample; at every node floor(sqrt(d))
candidate features are drawn without replacement and the split minimizing
weighted Gini impurity wins.  Split thresholds are observed feature values
(rule: x <= t goes left), which keeps predictions invariant under monotone
per-feature transforms applied at both fit and predict time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..core import ContractError
from ..rng import derive_rng


@dataclass(slots=True)
class RFNode:
    feature: int
    threshold: float
    left: "RFNode | RFLeaf"
    right: "RFNode | RFLeaf"


@dataclass(slots=True)
class RFLeaf:
    counts: tuple[int, int]  # (class 0, class 1), never both zero

    @property
    def vote(self) -> int:
        return 1 if self.counts[1] > self.counts[0] else 0

    @property
    def p1(self) -> float:
        return self.counts[1] / (self.counts[0] + self.counts[1])


def gini(counts0: int, counts1: int) -> float:
    """Gini impurity 1 - sum(p_c^2) of a two-class count pair."""
    n = counts0 + counts1
    if n == 0:
        return 0.0
    p0 = counts0 / n
    p1 = counts1 / n
    return 1.0 - (p0 * p0 + p1 * p1)


def _best_split(
    x: np.ndarray, y: np.ndarray, features: np.ndarray
) -> tuple[int, float, np.ndarray] | None:
    """Lowest weighted-Gini split over the candidate features, or None."""
    n = y.shape[0]
    total1 = int(y.sum())
    total0 = n - total1
    best: tuple[float, int, float] | None = None  # (score, feature, threshold)
    for f in features:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        sorted_vals = col[order]
        sorted_y = y[order]
        # boundaries between distinct consecutive values; left gets x <= sorted_vals[i]
        cuts = np.flatnonzero(sorted_vals[:-1] != sorted_vals[1:])
        if cuts.size == 0:
            continue
        ones_left = np.cumsum(sorted_y)[cuts]
        n_left = cuts + 1
        zeros_left = n_left - ones_left
        ones_right = total1 - ones_left
        n_right = n - n_left
        zeros_right = n_right - ones_right
        gini_left = 1.0 - ((zeros_left / n_left) ** 2 + (ones_left / n_left) ** 2)
        gini_right = 1.0 - ((zeros_right / n_right) ** 2 + (ones_right / n_right) ** 2)
        weighted = (n_left * gini_left + n_right * gini_right) / n
        best_i = int(np.argmin(weighted))
        score = float(weighted[best_i])
        if best is None or score < best[0]:
            best = (score, int(f), float(sorted_vals[cuts[best_i]]))
    if best is None:
        return None
    _, feature, threshold = best
    return feature, threshold, x[:, feature] <= threshold


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int | None,
    min_samples_split: int,
    n_candidates: int,
    rng: np.random.Generator,
) -> RFNode | RFLeaf:
    n = y.shape[0]
    ones = int(y.sum())
    if (
        ones in (0, n)
        or n < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return RFLeaf((n - ones, ones))
    # best split among the candidate draw; when every candidate is constant,
    # keep inspecting the remaining features so a splittable node still splits
    order = rng.permutation(x.shape[1])
    split = _best_split(x, y, order[:n_candidates])
    if split is None:
        for f in order[n_candidates:]:
            split = _best_split(x, y, np.array([f]))
            if split is not None:
                break
    if split is None:
        return RFLeaf((n - ones, ones))
    feature, threshold, left_mask = split
    return RFNode(
        feature=feature,
        threshold=threshold,
        left=_grow(x[left_mask], y[left_mask], depth + 1, max_depth,
                   min_samples_split, n_candidates, rng),
        right=_grow(x[~left_mask], y[~left_mask], depth + 1, max_depth,
                    min_samples_split, n_candidates, rng),
    )


@dataclass(slots=True)
class RandomForestModel:
    trees: list[RFNode | RFLeaf]
    n_estimators: int
    max_depth: int | None
    min_samples_split: int
    feature_count: int
    rng_seed: int = 0
    # per-column standardization recorded at training time, applied at inference
    feature_scaling: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def scale(self, rows: np.ndarray) -> np.ndarray:
        if self.feature_scaling is None:
            return rows
        means, stds = self.feature_scaling
        return (rows - np.asarray(means)) / np.asarray(stds)


def rforest_fit(
    rows: np.ndarray,
    labels: np.ndarray,
    n_estimators: int = 100,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    rng_seed: int = 0,
) -> RandomForestModel:
    rows = np.asarray(rows, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if rows.ndim != 2 or rows.shape[0] != labels.shape[0]:
        raise ContractError("rows and labels must align")
    if rows.shape[0] < 2:
        raise ContractError("need at least 2 samples")
    if min_samples_split < 2:
        raise ContractError("min_samples_split must be >= 2")
    if not set(np.unique(labels)) <= {0, 1}:
        raise ContractError("labels must be 0/1")
    if len(np.unique(labels)) == 1:
        warnings.warn("single-class training data; forest degenerates to one vote", stacklevel=2)
    n, d = rows.shape
    n_candidates = max(1, math.floor(math.sqrt(d)))
    trees: list[RFNode | RFLeaf] = []
    for t in range(n_estimators):
        rng = derive_rng(rng_seed, "rf-tree", t)
        boot = rng.integers(0, n, size=n)
        trees.append(
            _grow(rows[boot], labels[boot], 0, max_depth, min_samples_split, n_candidates, rng)
        )
    return RandomForestModel(
        trees=trees,
        n_estimators=n_estimators,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        feature_count=d,
        rng_seed=rng_seed,
    )


def _leaf_for(node: RFNode | RFLeaf, row: np.ndarray) -> RFLeaf:
    while isinstance(node, RFNode):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node


def rforest_predict(model: RandomForestModel, row: np.ndarray) -> tuple[int, float]:
    """Majority vote and mean leaf class-1 frequency; vote ties fall to 0."""
    row = np.asarray(row, dtype=float).reshape(-1)
    if row.shape[0] != model.feature_count:
        raise ContractError(
            f"expected {model.feature_count} features, got {row.shape[0]}"
        )
    votes = 0
    prob = 0.0
    for tree in model.trees:
        leaf = _leaf_for(tree, row)
        votes += leaf.vote
        prob += leaf.p1
    label = 1 if votes > len(model.trees) - votes else 0
    return label, prob / len(model.trees)


def rforest_predict_many(model: RandomForestModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != model.feature_count:
        raise ContractError(f"expected rows with {model.feature_count} features")
    votes = np.zeros(rows.shape[0], dtype=int)
    idx = np.arange(rows.shape[0])
    for tree in model.trees:
        stack: list[tuple[RFNode | RFLeaf, np.ndarray]] = [(tree, idx)]
        while stack:
            node, node_idx = stack.pop()
            if isinstance(node, RFLeaf):
                votes[node_idx] += node.vote
                continue
            mask = rows[node_idx, node.feature] <= node.threshold
            stack.append((node.left, node_idx[mask]))
            stack.append((node.right, node_idx[~mask]))
    return (votes > len(model.trees) - votes).astype(int)
