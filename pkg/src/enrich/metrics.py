"""Binary classification metrics, evaluation reports, and comparison tables."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .frame import DataError

__all__ = [
    "ConfusionMatrix",
    "ClassMetrics",
    "EvaluationReport",
    "ComparisonTable",
    "confusion",
    "metrics",
    "report_from_json_dict",
    "score",
    "SCORING_NAMES",
    "compare_report",
    "table_to_csv",
]

SCORING_NAMES = ("macro_f1", "recall_pos", "precision_pos")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionMatrix:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise DataError("y_true and y_pred must have the same length")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
    )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return precision, recall, f1


@dataclass(frozen=True)
class EvaluationReport:
    per_class: dict[int, ClassMetrics]
    macro: dict[str, float]
    weighted: dict[str, float]
    accuracy: float
    fingerprint: dict[str, str] = field(default_factory=dict)

    @property
    def macro_f1(self) -> float:
        return self.macro["f1"]

    def to_json_dict(self) -> dict:
        return {
            "per_class": {
                str(label): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in sorted(self.per_class.items())
            },
            "macro": dict(self.macro),
            "weighted": dict(self.weighted),
            "accuracy": self.accuracy,
            "fingerprint": dict(self.fingerprint),
        }


def report_from_json_dict(doc: dict) -> EvaluationReport:
    """Inverse of EvaluationReport.to_json_dict."""
    per_class = {
        int(label): ClassMetrics(
            m["precision"], m["recall"], m["f1"], int(m["support"])
        )
        for label, m in doc["per_class"].items()
    }
    return EvaluationReport(
        per_class,
        dict(doc["macro"]),
        dict(doc["weighted"]),
        doc["accuracy"],
        dict(doc.get("fingerprint", {})),
    )


def metrics(conf: ConfusionMatrix, fingerprint: dict[str, str] | None = None) -> EvaluationReport:
    """Per-class, macro, and weighted precision/recall/F1 plus accuracy.

    Zero denominators yield 0 so degenerate all-negative predictors score
    poorly instead of erroring.
    """
    p1, r1, f1_1 = _prf(conf.tp, conf.fp, conf.fn)
    p0, r0, f1_0 = _prf(conf.tn, conf.fn, conf.fp)
    support1 = conf.tp + conf.fn
    support0 = conf.tn + conf.fp
    total = conf.total
    if total == 0:
        raise DataError("cannot compute metrics over zero samples")
    per_class = {
        0: ClassMetrics(p0, r0, f1_0, support0),
        1: ClassMetrics(p1, r1, f1_1, support1),
    }
    macro = {
        "precision": (p0 + p1) / 2.0,
        "recall": (r0 + r1) / 2.0,
        "f1": (f1_0 + f1_1) / 2.0,
    }
    weighted = {
        "precision": (p0 * support0 + p1 * support1) / total,
        "recall": (r0 * support0 + r1 * support1) / total,
        "f1": (f1_0 * support0 + f1_1 * support1) / total,
    }
    accuracy = (conf.tp + conf.tn) / total
    return EvaluationReport(per_class, macro, weighted, accuracy, fingerprint or {})


def score(y_true: np.ndarray, y_pred: np.ndarray, scoring: str = "macro_f1") -> float:
    """One scalar score for model selection."""
    report = metrics(confusion(y_true, y_pred))
    if scoring == "macro_f1":
        return report.macro["f1"]
    if scoring == "recall_pos":
        return report.per_class[1].recall
    if scoring == "precision_pos":
        return report.per_class[1].precision
    raise DataError(f"unknown scoring {scoring!r}; expected one of {SCORING_NAMES}")


_ROW_ORDER = (
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
)


def _report_value(report: EvaluationReport, row: str) -> float:
    if row == "accuracy":
        return report.accuracy
    kind, _, name = row.partition("_")
    if kind in ("macro", "weighted"):
        return getattr(report, kind)[name]
    metric, _, label = row.rpartition("_")
    cm = report.per_class[int(label)]
    return float(getattr(cm, metric))


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    values: tuple[float, ...]
    best: tuple[str, ...]  # labels achieving the row maximum


@dataclass(frozen=True)
class ComparisonTable:
    labels: tuple[str, ...]
    rows: tuple[ComparisonRow, ...]

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "rows": [
                {"metric": r.metric, "values": list(r.values), "best": list(r.best)}
                for r in self.rows
            ],
        }


def compare_report(entries: list[tuple[str, EvaluationReport]]) -> ComparisonTable:
    """Metrics as rows, pipeline labels as columns, per-row maxima marked."""
    if not entries:
        raise DataError("comparison needs at least one labeled report")
    labels = tuple(label for label, _ in entries)
    if len(set(labels)) != len(labels):
        raise DataError("comparison labels must be unique")
    rows = []
    for metric in _ROW_ORDER:
        values = tuple(_report_value(report, metric) for _, report in entries)
        top = max(values)
        best = tuple(label for label, v in zip(labels, values) if v == top)
        rows.append(ComparisonRow(metric, values, best))
    return ComparisonTable(labels, tuple(rows))


def table_to_csv(table: ComparisonTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["metric", *table.labels])
    for row in table.rows:
        writer.writerow([row.metric, *[repr(v) for v in row.values]])
    return out.getvalue()
