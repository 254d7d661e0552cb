"""Evaluation metrics, scoring, and side-by-side comparison tables."""
import csv
import io
import json

import numpy as np
import pytest

from enrich import (
    ConfusionMatrix,
    DataError,
    compare_report,
    confusion,
    metrics,
    score,
    table_to_csv,
)
from enrich.metrics import report_from_json_dict

EXPECTED_ROWS = [
    "precision_0",
    "recall_0",
    "f1_0",
    "support_0",
    "precision_1",
    "recall_1",
    "f1_1",
    "support_1",
    "macro_precision",
    "macro_recall",
    "macro_f1",
    "weighted_precision",
    "weighted_recall",
    "weighted_f1",
    "accuracy",
]


def test_confusion_counts_by_hand():
    conf = confusion(np.array([1, 1, 0, 0, 1]), np.array([1, 0, 0, 1, 1]))
    assert (conf.tp, conf.fp, conf.fn, conf.tn) == (2, 1, 1, 1)
    assert conf.total == 5


def test_confusion_rejects_length_mismatch():
    with pytest.raises(DataError, match="same length"):
        confusion(np.array([1, 0]), np.array([1]))


def test_metrics_hand_oracle():
    report = metrics(ConfusionMatrix(tp=2, fp=1, fn=1, tn=1))
    one = report.per_class[1]
    zero = report.per_class[0]
    assert one.precision == pytest.approx(2 / 3, abs=1e-15)
    assert one.recall == pytest.approx(2 / 3, abs=1e-15)
    assert one.f1 == pytest.approx(2 / 3, abs=1e-15)
    assert one.support == 3
    assert zero.precision == pytest.approx(0.5, abs=1e-15)
    assert zero.recall == pytest.approx(0.5, abs=1e-15)
    assert zero.support == 2
    assert report.macro["precision"] == pytest.approx(7 / 12, abs=1e-15)
    assert report.macro["f1"] == pytest.approx((0.5 + 2 / 3) / 2, abs=1e-15)
    assert report.macro_f1 == report.macro["f1"]
    assert report.accuracy == pytest.approx(0.6, abs=1e-15)
    assert report.weighted["recall"] == pytest.approx(0.6, abs=1e-15)


def test_perfect_predictions_score_one_everywhere():
    report = metrics(confusion(np.array([0, 1, 0, 1]), np.array([0, 1, 0, 1])))
    for label in (0, 1):
        cm = report.per_class[label]
        assert cm.precision == cm.recall == cm.f1 == 1.0
    assert report.macro["f1"] == 1.0
    assert report.weighted["f1"] == 1.0
    assert report.accuracy == 1.0


def test_macro_metrics_are_symmetric_under_label_swap():
    rng = np.random.default_rng(8)
    for _ in range(25):
        y_true = rng.integers(0, 2, size=60)
        y_pred = rng.integers(0, 2, size=60)
        if len(set(y_true.tolist())) < 2:
            continue
        a = metrics(confusion(y_true, y_pred))
        b = metrics(confusion(1 - y_true, 1 - y_pred))
        for key in ("precision", "recall", "f1"):
            assert a.macro[key] == pytest.approx(b.macro[key], abs=1e-12)
        assert a.accuracy == pytest.approx(b.accuracy, abs=1e-12)


def test_weighted_recall_equals_accuracy():
    rng = np.random.default_rng(9)
    for _ in range(40):
        y_true = rng.integers(0, 2, size=rng.integers(5, 80))
        y_pred = rng.integers(0, 2, size=len(y_true))
        report = metrics(confusion(y_true, y_pred))
        assert abs(report.weighted["recall"] - report.accuracy) <= 1e-12


def test_zero_denominators_score_zero_not_error():
    # All-negative predictor against mixed truth: no positive predictions.
    report = metrics(confusion(np.array([1, 1, 0]), np.array([0, 0, 0])))
    one = report.per_class[1]
    assert one.precision == 0.0
    assert one.recall == 0.0
    assert one.f1 == 0.0
    # Truth has no positives at all: recall_1 denominator is empty too.
    report = metrics(confusion(np.array([0, 0]), np.array([1, 0])))
    assert report.per_class[1].recall == 0.0
    assert report.per_class[1].f1 == 0.0


def test_metrics_rejects_empty_totals():
    with pytest.raises(DataError, match="zero samples"):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_score_names_and_values():
    y_true = np.array([1, 1, 0, 0, 1])
    y_pred = np.array([1, 0, 0, 1, 1])
    assert score(y_true, y_pred, "recall_pos") == pytest.approx(2 / 3, abs=1e-15)
    assert score(y_true, y_pred, "precision_pos") == pytest.approx(2 / 3, abs=1e-15)
    assert score(y_true, y_pred, "macro_f1") == pytest.approx(
        (0.5 + 2 / 3) / 2, abs=1e-15
    )
    assert score(y_true, y_pred) == score(y_true, y_pred, "macro_f1")
    with pytest.raises(DataError, match="unknown scoring"):
        score(y_true, y_pred, "auc")


def test_report_json_roundtrip():
    report = metrics(
        confusion(np.array([1, 0, 1, 0, 1]), np.array([1, 1, 0, 0, 1])),
        fingerprint={"config": "abc123"},
    )
    doc = json.loads(json.dumps(report.to_json_dict()))
    back = report_from_json_dict(doc)
    assert back == report
    assert back.fingerprint == {"config": "abc123"}
    # per_class labels survive the string keys JSON forces.
    assert set(back.per_class) == {0, 1}


def test_compare_report_marks_row_maxima():
    strong = metrics(confusion(np.array([1, 1, 0, 0]), np.array([1, 1, 0, 0])))
    weak = metrics(confusion(np.array([1, 1, 0, 0]), np.array([0, 1, 0, 1])))
    table = compare_report([("strong", strong), ("weak", weak)])
    assert table.labels == ("strong", "weak")
    assert [r.metric for r in table.rows] == EXPECTED_ROWS
    by_metric = {r.metric: r for r in table.rows}
    assert by_metric["accuracy"].values == (1.0, 0.5)
    assert by_metric["accuracy"].best == ("strong",)
    assert by_metric["macro_f1"].best == ("strong",)
    # Supports tie across pipelines, so both labels are marked best.
    assert by_metric["support_1"].best == ("strong", "weak")
    for row in table.rows:
        top = max(row.values)
        assert row.best == tuple(
            label for label, v in zip(table.labels, row.values) if v == top
        )


def test_compare_report_single_entry_and_errors():
    only = metrics(confusion(np.array([1, 0]), np.array([1, 0])))
    table = compare_report([("only", only)])
    assert all(row.best == ("only",) for row in table.rows)
    with pytest.raises(DataError, match="at least one"):
        compare_report([])
    with pytest.raises(DataError, match="unique"):
        compare_report([("a", only), ("a", only)])


def test_table_csv_roundtrip_is_exact():
    a = metrics(confusion(np.array([1, 1, 0, 0, 1]), np.array([1, 0, 0, 1, 1])))
    b = metrics(confusion(np.array([1, 1, 0, 0, 1]), np.array([1, 1, 1, 0, 1])))
    table = compare_report([("base", a), ("tuned", b)])
    text = table_to_csv(table)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["metric", "base", "tuned"]
    assert [r[0] for r in rows[1:]] == EXPECTED_ROWS
    for parsed, row in zip(rows[1:], table.rows):
        assert [float(cell) for cell in parsed[1:]] == list(row.values)


def test_comparison_table_json_shape():
    a = metrics(confusion(np.array([1, 0]), np.array([1, 0])))
    doc = compare_report([("x", a)]).to_json_dict()
    assert doc["labels"] == ["x"]
    assert len(doc["rows"]) == len(EXPECTED_ROWS)
    assert doc["rows"][0] == {
        "metric": "precision_0",
        "values": [1.0],
        "best": ["x"],
    }