"""Classification and regression quality metrics with weighted averaging."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..core import ContractError

MAPE_FLOOR = 1e-9


class MetricsKind(str, Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass(frozen=True, slots=True)
class ClassMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, slots=True)
class MetricsReport:
    kind: MetricsKind
    accuracy: float | None = None
    per_class: Mapping[int, ClassMetrics] | None = None
    weighted: ClassMetrics | None = None
    mae: float | None = None
    rmse: float | None = None
    mape: float | None = None  # None when every target was below the MAPE floor
    mape_skipped: int = 0

    def to_doc(self) -> dict:
        doc: dict = {"kind": self.kind.value}
        if self.kind is MetricsKind.CLASSIFICATION:
            doc["accuracy"] = self.accuracy
            doc["per_class"] = {
                str(label): {
                    "accuracy": m.accuracy,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in (self.per_class or {}).items()
            }
            if self.weighted is not None:
                w = self.weighted
                doc["weighted"] = {
                    "accuracy": w.accuracy,
                    "precision": w.precision,
                    "recall": w.recall,
                    "f1": w.f1,
                    "support": w.support,
                }
        else:
            doc.update(
                {
                    "mae": self.mae,
                    "rmse": self.rmse,
                    "mape": self.mape,
                    "mape_skipped": self.mape_skipped,
                }
            )
        return doc


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def classification_metrics(
    predictions: Sequence[int], labels: Sequence[int]
) -> MetricsReport:
    """Per-class precision/recall/F1/accuracy plus support-weighted averages.

    Zero-denominator conventions: precision, recall and F1 are 0 when their
    denominator is 0.  Per-class accuracy is one-vs-rest.
    """
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    if preds.shape != labs.shape or preds.size == 0:
        raise ContractError("predictions and labels must be equal-length and non-empty")
    total = labs.size
    classes = sorted(set(labs.tolist()) | set(preds.tolist()))
    per_class: dict[int, ClassMetrics] = {}
    for c in classes:
        tp = int(np.sum((preds == c) & (labs == c)))
        fp = int(np.sum((preds == c) & (labs != c)))
        fn = int(np.sum((preds != c) & (labs == c)))
        tn = total - tp - fp - fn
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2.0 * precision * recall, precision + recall)
        per_class[int(c)] = ClassMetrics(
            accuracy=(tp + tn) / total,
            precision=precision,
            recall=recall,
            f1=f1,
            support=tp + fn,
        )
    support_total = sum(m.support for m in per_class.values())
    weighted = ClassMetrics(
        accuracy=sum(m.accuracy * m.support for m in per_class.values()) / support_total,
        precision=sum(m.precision * m.support for m in per_class.values()) / support_total,
        recall=sum(m.recall * m.support for m in per_class.values()) / support_total,
        f1=sum(m.f1 * m.support for m in per_class.values()) / support_total,
        support=support_total,
    )
    return MetricsReport(
        kind=MetricsKind.CLASSIFICATION,
        accuracy=float(np.mean(preds == labs)),
        per_class=per_class,
        weighted=weighted,
    )


def regression_metrics(
    predictions: Sequence[float], targets: Sequence[float]
) -> MetricsReport:
    """MAE, RMSE and MAPE; MAPE skips targets with |y| below 1e-9."""
    preds = np.asarray(predictions, dtype=float)
    targs = np.asarray(targets, dtype=float)
    if preds.shape != targs.shape or preds.size == 0:
        raise ContractError("predictions and targets must be equal-length and non-empty")
    err = preds - targs
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err**2)))
    usable = np.abs(targs) >= MAPE_FLOOR
    skipped = int(np.sum(~usable))
    mape = (
        float(np.mean(np.abs(err[usable]) / np.abs(targs[usable]))) if usable.any() else None
    )
    return MetricsReport(
        kind=MetricsKind.REGRESSION, mae=mae, rmse=rmse, mape=mape, mape_skipped=skipped
    )


def format_classification_table(
    report: MetricsReport, class_names: Mapping[int, str] | None = None
) -> str:
    """Aligned per-class table with a trailing support-weighted average row."""
    if report.kind is not MetricsKind.CLASSIFICATION or report.per_class is None:
        raise ContractError("classification report required")
    names = class_names or {}
    header = ["Label", "Accuracy", "Precision", "Recall", "F1-score", "Samples"]
    rows = [header]
    for label, m in sorted(report.per_class.items()):
        rows.append(
            [
                names.get(label, str(label)),
                f"{m.accuracy:.3f}",
                f"{m.precision:.2f}",
                f"{m.recall:.2f}",
                f"{m.f1:.2f}",
                str(m.support),
            ]
        )
    w = report.weighted
    rows.append(
        ["Weighted avg", f"{w.accuracy:.2f}", f"{w.precision:.2f}", f"{w.recall:.2f}",
         f"{w.f1:.2f}", str(w.support)]
    )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(widths[i + 1]) for i, c in enumerate(r[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def format_regression_table(report: MetricsReport, model_name: str = "Model") -> str:
    if report.kind is not MetricsKind.REGRESSION:
        raise ContractError("regression report required")
    mape = f"{report.mape:.4f}" if report.mape is not None else "undefined"
    header = ["Model", "MAE", "RMSE", "MAPE"]
    row = [model_name, f"{report.mae:.4f}", f"{report.rmse:.4f}", mape]
    widths = [max(len(header[i]), len(row[i])) for i in range(4)]
    return "\n".join(
        "  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i]) for i, c in enumerate(r))
        for r in (header, row)
    )
