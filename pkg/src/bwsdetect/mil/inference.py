"""Scoring and exact inference for the multi-instance model.

The joint score of (bag, instance labeling, bag label) decomposes into a
cardinality term over the positive/negative counts plus a sum of per-instance
terms (w . x_i) * y_i. Because the cardinality term depends on the labeling
only through the positive count k, the maximizing labeling with exactly k
positives always flips the k highest-scoring instances, so exact inference
reduces to one sort plus a sweep over k.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..errors import DimensionMismatchError, InfeasibleInferenceError
from .types import (
    FORBIDDEN,
    NEGATIVE,
    POSITIVE,
    Bag,
    CardinalityModel,
    ExtendedScore,
    Instance,
    InstanceLabeling,
    ModelWeights,
    check_bag_label,
)


def _check_dims(w: ModelWeights, dim: int, what: str = "instance"):
    if w.w.shape[0] != dim:
        raise DimensionMismatchError(
            f"weight dimension {w.w.shape[0]} != {what} dimension {dim}"
        )


def instance_potential(w: ModelWeights, x: Instance, y: int) -> float:
    """(w . x) * y for one instance and a candidate instance label."""
    check_bag_label(y)
    _check_dims(w, x.dim)
    return float(np.dot(w.w, x.features)) * y


def cardinality_potential(model: CardinalityModel, m_pos: int, m_neg: int,
                          bag_label: int) -> ExtendedScore:
    """Score of the count pair (m_pos, m_neg) under the given bag label."""
    return model.potential(m_pos, m_neg, bag_label)


def instance_scores(w: ModelWeights, bag: Bag) -> np.ndarray:
    """Per-instance scores s_i = w . x_i for a whole bag."""
    _check_dims(w, bag.dim, "bag feature")
    return bag.features @ w.w


def bag_score(w: ModelWeights, model: CardinalityModel, bag: Bag,
              labeling: InstanceLabeling, bag_label: int) -> ExtendedScore:
    """Joint score f(X, y, Y); FORBIDDEN when the count pair is disallowed."""
    if labeling.m != bag.m:
        raise ValueError(f"labeling length {labeling.m} != bag size {bag.m}")
    card = model.potential(labeling.m_pos, labeling.m_neg, bag_label)
    if card is FORBIDDEN:
        return FORBIDDEN
    scores = instance_scores(w, bag)
    return float(card + np.dot(scores, labeling.labels))


def _best_count(scores: np.ndarray, card_table: np.ndarray
                ) -> Tuple[int, np.ndarray]:
    """Maximize over k: flip the top-k scores positive, the rest negative.

    Ties among equal scores go to the lower original index (stable sort);
    ties among equal totals go to the smaller k (argmax takes the first).
    """
    m = scores.shape[0]
    order = np.argsort(-scores, kind="stable")
    prefix = np.concatenate(([0.0], np.cumsum(scores[order])))
    totals = 2.0 * prefix - prefix[m] + card_table
    k = int(np.argmax(totals))
    if not np.isfinite(totals[k]):
        raise InfeasibleInferenceError(
            "every positive-count value is forbidden for this bag label"
        )
    return k, order


def infer_labeling(w: ModelWeights, model: CardinalityModel, bag: Bag,
                   bag_label: int) -> Tuple[InstanceLabeling, float]:
    """Argmax instance labeling and its score F(X, Y) for a fixed bag label."""
    check_bag_label(bag_label)
    scores = instance_scores(w, bag)
    card_table = model.score_table(bag.m, bag_label)
    k, order = _best_count(scores, card_table)
    labels = np.full(bag.m, NEGATIVE, dtype=np.int64)
    labels[order[:k]] = POSITIVE
    # re-score the chosen labeling exactly as bag_score does, so that the
    # returned F reproduces bag_score bit-for-bit (prefix sums round
    # differently in the last ulp)
    best = float(card_table[k] + np.dot(scores, labels))
    return InstanceLabeling(labels), best


def predict_bag(w: ModelWeights, model: CardinalityModel, bag: Bag
                ) -> Tuple[int, InstanceLabeling]:
    """Bag label maximizing F(X, Y); exact ties resolve to -1.

    Trying Y = -1 first and replacing only on a strictly larger score makes
    the conservative tie rule fall out of the scan order.
    """
    best_label = None
    best_score = -np.inf
    best_labeling = None
    for candidate in (NEGATIVE, POSITIVE):
        try:
            labeling, score = infer_labeling(w, model, bag, candidate)
        except InfeasibleInferenceError:
            continue
        if best_label is None or score > best_score:
            best_label, best_score, best_labeling = candidate, score, labeling
    if best_label is None:
        raise InfeasibleInferenceError(
            "inference is infeasible for both bag labels"
        )
    return best_label, best_labeling
