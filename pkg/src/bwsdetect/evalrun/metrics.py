"""Confusion counts and the five summary metrics, reported as percentages."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ..mil.types import NEGATIVE, POSITIVE


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f_score: float
    specificity: float
    undefined: Tuple[str, ...] = ()
    per_fold: List["EvalReport"] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def report_from_counts(tp: int, fp: int, tn: int, fn: int) -> EvalReport:
    n = tp + fp + tn + fn
    if n < 1:
        raise ValueError("no predictions to score")
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return 100.0 * num / den

    accuracy = 100.0 * (tp + tn) / n
    precision = ratio(tp, tp + fp, "precision")
    recall = ratio(tp, tp + fn, "recall")
    specificity = ratio(tn, tn + fp, "specificity")
    if precision + recall > 0:
        f_score = 2.0 * precision * recall / (precision + recall)
    else:
        undefined.append("f_score")
        f_score = 0.0
    return EvalReport(tp, fp, tn, fn, accuracy, precision, recall, f_score,
                      specificity, undefined=tuple(undefined))


def metrics(predictions: Sequence[int], truths: Sequence[int]) -> EvalReport:
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape != truths.shape:
        raise ValueError(f"{len(predictions)} predictions vs "
                         f"{len(truths)} truths")
    if not np.all(np.isin(truths, (POSITIVE, NEGATIVE))):
        raise ValueError("truths must be +1 or -1")
    if not np.all(np.isin(predictions, (POSITIVE, NEGATIVE))):
        raise ValueError("predictions must be +1 or -1")
    tp = int(np.sum((predictions == POSITIVE) & (truths == POSITIVE)))
    fp = int(np.sum((predictions == POSITIVE) & (truths == NEGATIVE)))
    tn = int(np.sum((predictions == NEGATIVE) & (truths == NEGATIVE)))
    fn = int(np.sum((predictions == NEGATIVE) & (truths == POSITIVE)))
    return report_from_counts(tp, fp, tn, fn)


def pooled_report(folds: Sequence[EvalReport]) -> EvalReport:
    """Aggregate by summing confusion counts across folds."""
    if not folds:
        raise ValueError("no fold reports to pool")
    total = report_from_counts(
        sum(f.tp for f in folds), sum(f.fp for f in folds),
        sum(f.tn for f in folds), sum(f.fn for f in folds))
    total.per_fold = list(folds)
    return total
