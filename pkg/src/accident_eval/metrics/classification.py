"""Binary classification metrics over scenario-level verdicts.

Zero-denominator cases return 0.0 rather than raising, and the report marks
them degenerate so downstream tables can distinguish "bad" from "undefined".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..exceptions import MetricError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise MetricError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionCounts:
    if len(y_true) != len(y_pred):
        raise MetricError(f"length mismatch: {len(y_true)} labels vs {len(y_pred)} predictions")
    tp = fp = fn = tn = 0
    for truth, pred in zip(y_true, y_pred):
        if truth not in (0, 1) or pred not in (0, 1):
            raise MetricError(f"labels must be 0 or 1, got ({truth!r}, {pred!r})")
        if truth == 1 and pred == 1:
            tp += 1
        elif truth == 0 and pred == 1:
            fp += 1
        elif truth == 1 and pred == 0:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def precision(counts: ConfusionCounts) -> float:
    denom = counts.tp + counts.fp
    return counts.tp / denom if denom else 0.0


def recall(counts: ConfusionCounts) -> float:
    denom = counts.tp + counts.fn
    return counts.tp / denom if denom else 0.0


def f1_score(counts: ConfusionCounts) -> float:
    p = precision(counts)
    r = recall(counts)
    return 2 * p * r / (p + r) if (p + r) else 0.0


def accuracy(counts: ConfusionCounts) -> float:
    return (counts.tp + counts.tn) / counts.total if counts.total else 0.0


@dataclass(frozen=True)
class ClassificationReport:
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    accuracy: float
    degenerate: tuple[str, ...] = ()


def classification_report(counts: ConfusionCounts) -> ClassificationReport:
    if counts.total == 0:
        raise MetricError("cannot build a report from zero observations")
    degenerate = []
    if counts.tp + counts.fp == 0:
        degenerate.append("precision_undefined")
    if counts.tp + counts.fn == 0:
        degenerate.append("recall_undefined")
    p = precision(counts)
    r = recall(counts)
    if p + r == 0:
        degenerate.append("f1_undefined")
    return ClassificationReport(
        counts=counts,
        precision=p,
        recall=r,
        f1=f1_score(counts),
        accuracy=accuracy(counts),
        degenerate=tuple(degenerate),
    )
