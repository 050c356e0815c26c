"""Model (de)serialization.

One self-describing JSON document per model: ``schema_version``,
``model_kind``, hyperparameters and parameters.  Floats are written with
full repr precision so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .densenet import DenseNetModel
from .iforest import IsolationForestModel, Leaf, TreeNode
from .rforest import RandomForestModel, RFLeaf, RFNode

SCHEMA_VERSION = 1


def _iforest_node_doc(node: TreeNode | Leaf) -> dict:
    if isinstance(node, Leaf):
        return {"size": node.size}
    return {
        "feature": node.feature,
        "value": node.value,
        "left": _iforest_node_doc(node.left),
        "right": _iforest_node_doc(node.right),
    }


def _iforest_node_load(doc: dict) -> TreeNode | Leaf:
    if "size" in doc:
        return Leaf(size=doc["size"])
    return TreeNode(
        feature=doc["feature"],
        value=doc["value"],
        left=_iforest_node_load(doc["left"]),
        right=_iforest_node_load(doc["right"]),
    )


def _rf_node_doc(node: RFNode | RFLeaf) -> dict:
    if isinstance(node, RFLeaf):
        return {"counts": list(node.counts)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _rf_node_doc(node.left),
        "right": _rf_node_doc(node.right),
    }


def _rf_node_load(doc: dict) -> RFNode | RFLeaf:
    if "counts" in doc:
        return RFLeaf(counts=tuple(doc["counts"]))
    return RFNode(
        feature=doc["feature"],
        threshold=doc["threshold"],
        left=_rf_node_load(doc["left"]),
        right=_rf_node_load(doc["right"]),
    )


def model_to_doc(model) -> dict:
    if isinstance(model, IsolationForestModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "model_kind": "isolation_forest",
            "hyperparameters": {
                "n_estimators": model.n_estimators,
                "max_samples_fraction": model.max_samples_fraction,
                "contamination": model.contamination,
                "rng_seed": model.rng_seed,
            },
            "parameters": {
                "score_threshold": model.score_threshold,
                "feature_count": model.feature_count,
                "subsample_size": model.subsample_size,
                "degenerate": model.degenerate,
                "trees": [_iforest_node_doc(t) for t in model.trees],
            },
        }
    if isinstance(model, RandomForestModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "model_kind": "random_forest",
            "hyperparameters": {
                "n_estimators": model.n_estimators,
                "max_depth": model.max_depth,
                "min_samples_split": model.min_samples_split,
                "rng_seed": model.rng_seed,
            },
            "parameters": {
                "feature_count": model.feature_count,
                "feature_scaling": (
                    [list(model.feature_scaling[0]), list(model.feature_scaling[1])]
                    if model.feature_scaling
                    else None
                ),
                "trees": [_rf_node_doc(t) for t in model.trees],
            },
        }
    if isinstance(model, DenseNetModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "model_kind": "dense_net",
            "hyperparameters": {
                "hidden_width": model.hidden_width,
                "input_dim": model.input_dim,
                "output_dim": model.output_dim,
                "rng_seed": model.rng_seed,
            },
            "parameters": {
                "norm_min": model.norm_min,
                "norm_max": model.norm_max,
                "weights": [
                    {"shape": list(w.shape), "data": w.reshape(-1).tolist()}
                    for w in model.weights
                ],
                "biases": [
                    {"shape": list(b.shape), "data": b.reshape(-1).tolist()}
                    for b in model.biases
                ],
            },
        }
    raise TypeError(f"unknown model type {type(model).__name__}")


def model_from_doc(doc: dict):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema_version {version!r}")
    kind = doc.get("model_kind")
    hp = doc["hyperparameters"]
    params = doc["parameters"]
    if kind == "isolation_forest":
        return IsolationForestModel(
            trees=[_iforest_node_load(t) for t in params["trees"]],
            n_estimators=hp["n_estimators"],
            max_samples_fraction=hp["max_samples_fraction"],
            contamination=hp["contamination"],
            score_threshold=params["score_threshold"],
            feature_count=params["feature_count"],
            subsample_size=params["subsample_size"],
            rng_seed=hp.get("rng_seed", 0),
            degenerate=params.get("degenerate", False),
        )
    if kind == "random_forest":
        scaling = params.get("feature_scaling")
        return RandomForestModel(
            trees=[_rf_node_load(t) for t in params["trees"]],
            n_estimators=hp["n_estimators"],
            max_depth=hp["max_depth"],
            min_samples_split=hp["min_samples_split"],
            feature_count=params["feature_count"],
            rng_seed=hp.get("rng_seed", 0),
            feature_scaling=(tuple(scaling[0]), tuple(scaling[1])) if scaling else None,
        )
    if kind == "dense_net":
        return DenseNetModel(
            weights=[
                np.asarray(w["data"], dtype=float).reshape(w["shape"])
                for w in params["weights"]
            ],
            biases=[
                np.asarray(b["data"], dtype=float).reshape(b["shape"])
                for b in params["biases"]
            ],
            hidden_width=hp["hidden_width"],
            input_dim=hp["input_dim"],
            output_dim=hp["output_dim"],
            norm_min=params.get("norm_min"),
            norm_max=params.get("norm_max"),
            rng_seed=hp.get("rng_seed", 0),
        )
    raise ValueError(f"unknown model_kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_doc(model)), encoding="utf-8")


def load_model(path: str | Path):
    return model_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))
