"""From-scratch learners: isolation forest, dense regressor, random forest, metrics."""

from .densenet import (
    AdamState,
    DenseNetModel,
    TrainingError,
    densenet_forward,
    densenet_init,
    densenet_train_step,
)
from .iforest import IsolationForestModel, iforest_classify, iforest_fit, iforest_score
from .metrics import (
    MetricsReport,
    classification_metrics,
    format_classification_table,
    regression_metrics,
)
from .persist import load_model, save_model
from .rforest import RandomForestModel, rforest_fit, rforest_predict

__all__ = [
    "AdamState",
    "DenseNetModel",
    "IsolationForestModel",
    "MetricsReport",
    "RandomForestModel",
    "TrainingError",
    "classification_metrics",
    "densenet_forward",
    "densenet_init",
    "densenet_train_step",
    "format_classification_table",
    "iforest_classify",
    "iforest_fit",
    "iforest_score",
    "load_model",
    "regression_metrics",
    "rforest_fit",
    "rforest_predict",
    "save_model",
]
