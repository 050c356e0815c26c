"""Preprocessing, windowing, grid search, checkpointed training and evaluation."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import ContractError, Modality, PlausibilityRange, SensorReading, is_plausible
from .ingest import OccupancyRecord
from .models.densenet import AdamState, DenseNetModel, TrainingError, densenet_forward, densenet_init, densenet_train_step
from .models.iforest import IsolationForestModel, iforest_fit, iforest_score_many
from .models.metrics import MetricsReport, classification_metrics, format_classification_table, regression_metrics
from .models.rforest import RandomForestModel, rforest_fit, rforest_predict_many
from .rng import derive_rng, derive_seed

WINDOW_LEN = 3
EPOCHS = 50
BATCH_SIZE = 32
VALIDATION_FRACTION = 0.1

# Hyperparameter grids explored by default.
ANOMALY_GRID: dict[str, list] = {
    "n_estimators": [50, 100, 200],
    "max_samples_fraction": [0.6, 0.8, 1.0],
    "contamination": [0.01, 0.05, 0.1],
}
FORECAST_GRID: dict[str, list] = {
    "learning_rate": [0.01, 0.001, 0.0001],
    "hidden_width": [64, 128, 256],
}
PRESENCE_GRID: dict[str, list] = {
    "n_estimators": [50, 100, 200],
    "max_depth": [5, 10, None],
    "min_samples_split": [2, 5, 10],
}

PRESENCE_CLASS_NAMES = {0: "Unoccupied", 1: "Occupied"}
PRESENCE_FEATURES = ("temperature", "humidity", "co2")


def validate_grid(grid: Mapping[str, Sequence], allowed: Iterable[str]) -> None:
    allowed = set(allowed)
    unknown = set(grid) - allowed
    if unknown:
        raise ContractError(f"unknown hyperparameter(s) {sorted(unknown)}; allowed: {sorted(allowed)}")
    for name, values in grid.items():
        if len(values) == 0:
            raise ContractError(f"grid list for {name} is empty")


def grid_points(grid: Mapping[str, Sequence]) -> list[dict]:
    names = sorted(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def _fingerprint(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        a = np.ascontiguousarray(arr)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


@dataclass(slots=True)
class TrainingRun:
    """What happened during one training recipe, persisted beside the model."""

    learner: str
    grid_point: dict
    report: MetricsReport
    rng_seed: int
    dataset_fingerprint: str
    epoch_mae_history: list[float] | None = None
    best_epoch: int | None = None
    candidates: list[dict] = field(default_factory=list)
    disqualified: list[dict] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "schema_version": 1,
            "learner": self.learner,
            "grid_point": self.grid_point,
            "report": self.report.to_doc(),
            "rng_seed": self.rng_seed,
            "dataset_fingerprint": self.dataset_fingerprint,
            "epoch_mae_history": self.epoch_mae_history,
            "best_epoch": self.best_epoch,
            "candidates": self.candidates,
            "disqualified": self.disqualified,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=2), encoding="utf-8")


@dataclass(slots=True)
class PreprocessResult:
    """Plausible readings aligned on a shared cadence grid, min-max normalized."""

    modalities: list[Modality]
    grid_timestamps: np.ndarray
    table: np.ndarray      # rows x modalities, in [0, 1]
    raw_table: np.ndarray  # same shape, physical units
    norm_params: dict[Modality, tuple[float, float]]
    removed_count: int
    unusable: dict[Modality, str]

    def column(self, modality: Modality) -> np.ndarray:
        return self.table[:, self.modalities.index(modality)]

    def raw_column(self, modality: Modality) -> np.ndarray:
        return self.raw_table[:, self.modalities.index(modality)]


def normalize(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def denormalize(values: np.ndarray | float, lo: float, hi: float):
    return values * (hi - lo) + lo


def preprocess(
    readings: Sequence[SensorReading],
    ranges: Mapping[Modality, PlausibilityRange] | None = None,
    cadence_s: int = 60,
) -> PreprocessResult:
    """Drop implausible readings, resample per modality onto a common grid.

    Resampling is last-observation-carried-forward onto ticks anchored at the
    earliest plausible timestamp; rows before every modality has reported are
    dropped.  Modalities with fewer than 4 surviving points are unusable.
    """
    if not readings:
        raise ContractError("preprocess needs at least one reading")
    plausible = [r for r in readings if is_plausible(r, ranges)]
    removed = len(readings) - len(plausible)
    by_modality: dict[Modality, list[SensorReading]] = {}
    for r in plausible:
        by_modality.setdefault(r.modality, []).append(r)
    unusable: dict[Modality, str] = {}
    series: dict[Modality, tuple[np.ndarray, np.ndarray]] = {}
    for modality, rows in by_modality.items():
        if len(rows) < WINDOW_LEN + 1:
            unusable[modality] = f"only {len(rows)} plausible reading(s), need {WINDOW_LEN + 1}"
            continue
        rows.sort(key=lambda r: r.timestamp)
        series[modality] = (
            np.array([r.timestamp for r in rows], dtype=np.int64),
            np.array([r.value for r in rows], dtype=float),
        )
    if not series:
        raise ContractError("no modality has enough plausible readings to align")
    modalities = sorted(series, key=lambda m: m.value)
    t_min = min(int(ts[0]) for ts, _ in series.values())
    t_max = max(int(ts[-1]) for ts, _ in series.values())
    grid = np.arange(t_min, t_max + 1, cadence_s, dtype=np.int64)
    raw = np.empty((grid.shape[0], len(modalities)))
    defined = np.ones(grid.shape[0], dtype=bool)
    for j, modality in enumerate(modalities):
        ts, vals = series[modality]
        pos = np.searchsorted(ts, grid, side="right") - 1
        has_obs = pos >= 0
        defined &= has_obs
        raw[:, j] = vals[np.clip(pos, 0, len(vals) - 1)]
    raw = raw[defined]
    grid = grid[defined]
    norm_params: dict[Modality, tuple[float, float]] = {}
    table = np.empty_like(raw)
    for j, modality in enumerate(modalities):
        lo = float(raw[:, j].min())
        hi = float(raw[:, j].max())
        norm_params[modality] = (lo, hi)
        table[:, j] = normalize(raw[:, j], lo, hi)
    return PreprocessResult(
        modalities=modalities,
        grid_timestamps=grid,
        table=table,
        raw_table=raw,
        norm_params=norm_params,
        removed_count=removed,
        unusable=unusable,
    )


def make_windows(series: np.ndarray, window_len: int = WINDOW_LEN) -> tuple[np.ndarray, np.ndarray]:
    """Sliding (window, next value) pairs; order preserved."""
    series = np.asarray(series, dtype=float)
    n = series.shape[0]
    if n < window_len + 1:
        warnings.warn(f"series of length {n} is too short to window", stacklevel=2)
        return np.empty((0, window_len)), np.empty(0)
    count = n - window_len
    x = np.stack([series[i : i + window_len] for i in range(count)])
    y = series[window_len:]
    return x, y


def chrono_split(items, train_fraction: float = 0.8):
    """First ceil(f*N) samples for training, the rest for test; no shuffling."""
    n = len(items)
    if n < 2:
        raise ContractError("need at least 2 samples to split")
    k = math.ceil(train_fraction * n)
    return items[:k], items[k:]


def grid_search_anomaly(
    table: np.ndarray,
    labels: np.ndarray,
    grid: Mapping[str, Sequence] | None = None,
    rng_seed: int = 0,
) -> tuple[IsolationForestModel, TrainingRun]:
    """Exhaustive grid search selecting the best anomaly-class F1.

    Ties break to fewer estimators, then lower contamination, then smaller
    subsample fraction.  Trees depend only on (n_estimators, fraction) and the
    derived seed, so contamination variants share scores.
    """
    grid = dict(ANOMALY_GRID if grid is None else grid)
    validate_grid(grid, ANOMALY_GRID)
    for name, default in ANOMALY_GRID.items():
        grid.setdefault(name, default[:1])
    table = np.asarray(table, dtype=float)
    if table.ndim == 1:
        table = table.reshape(-1, 1)
    labels = np.asarray(labels).astype(int)
    if labels.shape[0] != table.shape[0]:
        raise ContractError("labels must align with table rows")
    by_f1 = bool(labels.any())
    if not by_f1:
        warnings.warn("no anomalies in labels; selecting by accuracy instead of F1", stacklevel=2)

    score_cache: dict[tuple, tuple[IsolationForestModel, np.ndarray]] = {}
    candidates = []
    for point in grid_points(grid):
        key = (point["n_estimators"], point["max_samples_fraction"])
        if key not in score_cache:
            model = iforest_fit(
                table,
                n_estimators=point["n_estimators"],
                max_samples_fraction=point["max_samples_fraction"],
                contamination=point["contamination"],
                rng_seed=derive_seed(rng_seed, "anomaly-grid", *key),
            )
            score_cache[key] = (model, iforest_score_many(model, table))
        base, scores = score_cache[key]
        threshold = float(np.quantile(scores, 1.0 - point["contamination"]))
        preds = (scores > threshold).astype(int)
        report = classification_metrics(preds, labels)
        selector = report.per_class[1].f1 if by_f1 and 1 in report.per_class else (
            report.accuracy if not by_f1 else 0.0
        )
        candidates.append((selector, point, threshold, base, report))

    candidates.sort(
        key=lambda c: (
            -c[0],
            c[1]["n_estimators"],
            c[1]["contamination"],
            c[1]["max_samples_fraction"],
        )
    )
    _, best_point, best_threshold, base_model, best_report = candidates[0]
    best_model = IsolationForestModel(
        trees=base_model.trees,
        n_estimators=best_point["n_estimators"],
        max_samples_fraction=best_point["max_samples_fraction"],
        contamination=best_point["contamination"],
        score_threshold=best_threshold,
        feature_count=base_model.feature_count,
        subsample_size=base_model.subsample_size,
        rng_seed=base_model.rng_seed,
        degenerate=base_model.degenerate,
    )
    run = TrainingRun(
        learner="isolation_forest",
        grid_point=best_point,
        report=best_report,
        rng_seed=rng_seed,
        dataset_fingerprint=_fingerprint(table, labels),
        candidates=[
            {"grid_point": point, "selector": sel} for sel, point, *_ in candidates
        ],
    )
    return best_model, run


def _epoch_batches(n: int, batch_size: int = BATCH_SIZE):
    for start in range(0, n, batch_size):
        yield slice(start, min(start + batch_size, n))


def train_forecaster(
    windows_x: np.ndarray,
    windows_y: np.ndarray,
    grid: Mapping[str, Sequence] | None = None,
    epochs: int = EPOCHS,
    rng_seed: int = 0,
    norm_params: tuple[float, float] | None = None,
    output_dim: int = 1,
) -> tuple[DenseNetModel, TrainingRun]:
    """Grid-searched, checkpointed training of the window regressor.

    Every grid point trains for ``epochs`` epochs of chronological batches;
    after each epoch the validation MAE (last 10% of the input) is measured
    and the best epoch's parameters are kept.  The grid winner is the lowest
    validation MAE; ties prefer narrower then faster-learning networks.
    """
    grid = dict(FORECAST_GRID if grid is None else grid)
    validate_grid(grid, FORECAST_GRID)
    for name, default in FORECAST_GRID.items():
        grid.setdefault(name, default[:1])
    x = np.asarray(windows_x, dtype=float)
    y = np.asarray(windows_y, dtype=float)
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise ContractError("need at least 2 aligned windows (train + validation)")
    val_n = max(1, round(VALIDATION_FRACTION * x.shape[0]))
    train_x, val_x = x[:-val_n], x[-val_n:]
    train_y, val_y = y[:-val_n], y[-val_n:]

    results = []
    disqualified = []
    for point in grid_points(grid):
        lr = point["learning_rate"]
        width = point["hidden_width"]
        model = densenet_init(
            hidden_width=width,
            rng_seed=derive_seed(rng_seed, "forecaster", width, lr),
            input_dim=x.shape[1],
            output_dim=output_dim,
        )
        adam = AdamState.for_model(model)
        history: list[float] = []
        best_mae = math.inf
        best_epoch = 0
        snapshot = model.copy_parameters()
        try:
            for epoch in range(1, epochs + 1):
                for batch in _epoch_batches(train_x.shape[0]):
                    densenet_train_step(model, train_x[batch], train_y[batch], lr, adam)
                val_pred = densenet_forward(model, val_x)
                mae = float(np.mean(np.abs(val_pred - val_y)))
                history.append(mae)
                if mae < best_mae:
                    best_mae = mae
                    best_epoch = epoch
                    snapshot = model.copy_parameters()
        except TrainingError as exc:
            disqualified.append({"grid_point": point, "reason": str(exc)})
            continue
        model.set_parameters(*snapshot)
        results.append((best_mae, width, -lr, point, model, history, best_epoch))

    if not results:
        raise TrainingError("every grid point diverged")
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    best_mae, _, _, point, model, history, best_epoch = results[0]
    if norm_params is not None:
        model.norm_min, model.norm_max = norm_params
    val_pred = densenet_forward(model, val_x)
    run = TrainingRun(
        learner="dense_net",
        grid_point=point,
        report=regression_metrics(np.atleast_1d(val_pred).ravel(), val_y.ravel()),
        rng_seed=rng_seed,
        dataset_fingerprint=_fingerprint(x, y),
        epoch_mae_history=history,
        best_epoch=best_epoch,
        candidates=[{"grid_point": r[3], "val_mae": r[0]} for r in results],
        disqualified=disqualified,
    )
    return model, run


def presence_features(records: Sequence[OccupancyRecord]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([[r.temperature, r.humidity, r.co2] for r in records], dtype=float)
    y = np.array([r.occupancy_label for r in records], dtype=int)
    return x, y


def train_presence(
    records: Sequence[OccupancyRecord],
    grid: Mapping[str, Sequence] | None = None,
    rng_seed: int = 0,
    train_fraction: float = 0.8,
    rebalance: bool = False,
) -> tuple[RandomForestModel, TrainingRun]:
    """Grid-searched random forest on (temperature, humidity, co2) features.

    Features are standardized per column with training statistics; the winning
    model carries the scaler so inference applies the identical transform.
    Selection is weighted F1 on the chronological test split.
    """
    grid = dict(PRESENCE_GRID if grid is None else grid)
    validate_grid(grid, PRESENCE_GRID)
    for name, default in PRESENCE_GRID.items():
        grid.setdefault(name, default[:1])
    if len(records) < 5:
        raise ContractError("need at least 5 labeled records")
    x, y = presence_features(records)
    if len(np.unique(y)) < 2:
        raise ContractError("merged training data contains a single class; training impossible")
    train_idx, test_idx = chrono_split(np.arange(len(records)), train_fraction)
    means = x[train_idx].mean(axis=0)
    stds = x[train_idx].std(axis=0)
    stds[stds == 0.0] = 1.0
    xs = (x - means) / stds
    train_x, train_y = xs[train_idx], y[train_idx]
    test_x, test_y = xs[test_idx], y[test_idx]
    if rebalance:
        rng = derive_rng(rng_seed, "presence-rebalance")
        counts = np.bincount(train_y, minlength=2)
        minority = int(np.argmin(counts))
        extra = counts.max() - counts.min()
        if extra > 0:
            pool = np.flatnonzero(train_y == minority)
            picks = rng.choice(pool, size=extra, replace=True)
            train_x = np.vstack([train_x, train_x[picks]])
            train_y = np.concatenate([train_y, train_y[picks]])

    def depth_key(d):
        return math.inf if d is None else d

    candidates = []
    for point in grid_points(grid):
        model = rforest_fit(
            train_x,
            train_y,
            n_estimators=point["n_estimators"],
            max_depth=point["max_depth"],
            min_samples_split=point["min_samples_split"],
            rng_seed=derive_seed(
                rng_seed, "presence-grid", point["n_estimators"],
                point["max_depth"], point["min_samples_split"],
            ),
        )
        preds = rforest_predict_many(model, test_x)
        report = classification_metrics(preds, test_y)
        candidates.append((report.weighted.f1, point, model, report))
    candidates.sort(
        key=lambda c: (
            -c[0],
            c[1]["n_estimators"],
            depth_key(c[1]["max_depth"]),
            c[1]["min_samples_split"],
        )
    )
    _, best_point, best_model, best_report = candidates[0]
    best_model.feature_scaling = (tuple(means.tolist()), tuple(stds.tolist()))
    run = TrainingRun(
        learner="random_forest",
        grid_point=best_point,
        report=best_report,
        rng_seed=rng_seed,
        dataset_fingerprint=_fingerprint(x, y),
        candidates=[{"grid_point": p, "weighted_f1": f} for f, p, *_ in candidates],
    )
    return best_model, run


def evaluate_on_stream(
    model: RandomForestModel,
    labeled_stream: Iterable[tuple[Sequence[float], int | None]],
) -> MetricsReport:
    """Per-class presence metrics over a stream of (features, label) samples."""
    rows = []
    labels = []
    for features, label in labeled_stream:
        if label is None:
            raise ContractError("stream sample is missing its ground-truth label")
        rows.append(features)
        labels.append(int(label))
    if not rows:
        raise ContractError("stream is empty")
    x = model.scale(np.asarray(rows, dtype=float))
    preds = rforest_predict_many(model, x)
    return classification_metrics(preds, np.asarray(labels))


def presence_table(report: MetricsReport) -> str:
    """Render a presence report in the Unoccupied/Occupied/Weighted-avg layout."""
    return format_classification_table(report, PRESENCE_CLASS_NAMES)


def records_to_stream(records: Sequence[OccupancyRecord]):
    for r in records:
        yield (r.temperature, r.humidity, r.co2), r.occupancy_label
