import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smartbuilding.core import ContractError
from smartbuilding.models.metrics import (
    MetricsKind,
    classification_metrics,
    format_classification_table,
    format_regression_table,
    regression_metrics,
)


def brute_force_class_metrics(preds, labels, cls):
    """Independent per-sample recount of the defining formulas."""
    tp = sum(1 for p, l in zip(preds, labels) if p == cls and l == cls)
    fp = sum(1 for p, l in zip(preds, labels) if p == cls and l != cls)
    fn = sum(1 for p, l in zip(preds, labels) if p != cls and l == cls)
    tn = len(labels) - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(labels)
    support = tp + fn
    return accuracy, precision, recall, f1, support


class TestClassification:
    def test_perfect_predictions(self):
        report = classification_metrics([0, 1, 1, 0], [0, 1, 1, 0])
        assert report.accuracy == 1.0
        for m in report.per_class.values():
            assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)
        assert report.weighted.f1 == 1.0

    def test_known_confusion_matrix(self):
        # TP=2 FP=1 FN=1 TN=6 for class 1
        preds = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
        labels = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]
        report = classification_metrics(preds, labels)
        c1 = report.per_class[1]
        assert abs(c1.precision - 2 / 3) < 1e-9
        assert abs(c1.recall - 2 / 3) < 1e-9
        assert abs(c1.f1 - 2 / 3) < 1e-9
        assert abs(report.accuracy - 0.8) < 1e-9

    def test_zero_denominator_convention(self):
        report = classification_metrics([0, 0, 0, 0], [1, 1, 0, 0])
        c1 = report.per_class[1]
        assert c1.precision == 0.0 and c1.recall == 0.0 and c1.f1 == 0.0
        assert c1.support == 2

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            classification_metrics([0, 1], [0])
        with pytest.raises(ContractError):
            classification_metrics([], [])

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=200
        )
    )
    def test_matches_brute_force_recount(self, pairs):
        preds = [p for p, _ in pairs]
        labels = [l for _, l in pairs]
        report = classification_metrics(preds, labels)
        total_support = 0
        weighted = {"accuracy": 0.0, "precision": 0.0, "recall": 0.0, "f1": 0.0}
        for cls, metrics in report.per_class.items():
            acc, precision, recall, f1, support = brute_force_class_metrics(preds, labels, cls)
            assert metrics.accuracy == pytest.approx(acc, abs=1e-12)
            assert metrics.precision == pytest.approx(precision, abs=1e-12)
            assert metrics.recall == pytest.approx(recall, abs=1e-12)
            assert metrics.f1 == pytest.approx(f1, abs=1e-12)
            assert metrics.support == support
            total_support += support
            for name, value in zip(weighted, (acc, precision, recall, f1)):
                weighted[name] += value * support
        assert report.weighted.support == total_support
        for name in weighted:
            assert getattr(report.weighted, name) == pytest.approx(
                weighted[name] / total_support, abs=1e-12
            )


class TestRegression:
    def test_perfect_predictions(self):
        report = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (report.mae, report.rmse, report.mape) == (0.0, 0.0, 0.0)

    def test_worked_example(self):
        report = regression_metrics([110.0, 180.0], [100.0, 200.0])
        assert report.mae == pytest.approx(15.0)
        assert report.rmse == pytest.approx(np.sqrt((100.0 + 400.0) / 2.0))
        assert report.mape == pytest.approx(0.1)

    def test_single_pair_identities(self):
        report = regression_metrics([2.0], [1.0])
        assert report.mae == report.rmse == report.mape == 1.0

    def test_mape_skips_near_zero_targets(self):
        report = regression_metrics([1.0, 5.0], [0.0, 4.0])
        assert report.mape_skipped == 1
        assert report.mape == pytest.approx(0.25)

    def test_all_targets_skipped_marks_mape_undefined(self):
        report = regression_metrics([1.0, 2.0], [0.0, 1e-12])
        assert report.mape is None
        assert report.mape_skipped == 2

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            regression_metrics([1.0], [1.0, 2.0])


class TestRendering:
    def test_presence_layout(self):
        report = classification_metrics([0, 1, 0, 1, 1], [0, 1, 1, 1, 0])
        text = format_classification_table(report, {0: "Unoccupied", 1: "Occupied"})
        lines = text.splitlines()
        assert lines[0].startswith("Label")
        assert lines[1].startswith("Unoccupied")
        assert lines[2].startswith("Occupied")
        assert lines[3].startswith("Weighted avg")
        assert all(len(line.split()) >= 6 for line in lines[1:3])

    def test_regression_layout(self):
        report = regression_metrics([1.0], [2.0])
        text = format_regression_table(report, model_name="Temperature")
        assert "MAE" in text and "RMSE" in text and "MAPE" in text
        assert "Temperature" in text

    def test_doc_round_trip_fields(self):
        report = classification_metrics([0, 1], [1, 1])
        doc = report.to_doc()
        assert doc["kind"] == MetricsKind.CLASSIFICATION.value
        assert set(doc["weighted"]) == {"accuracy", "precision", "recall", "f1", "support"}
