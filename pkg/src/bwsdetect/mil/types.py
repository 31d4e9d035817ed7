"""Core data types for the multi-instance model.

A bag holds the feature vectors of one image's regions plus an optional
binary label. Cardinality models score the (positive count, negative count)
pair of an instance labeling jointly with the bag label; combinations may be
forbidden outright, which is represented by the ``FORBIDDEN`` sentinel rather
than a floating -inf so that it can never leak into arithmetic unnoticed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

POSITIVE = 1
NEGATIVE = -1

STANDARD_MIL = "standard_mil"
CUSTOM = "custom"


class _Forbidden:
    """Sum-absorbing sentinel for forbidden cardinality combinations."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FORBIDDEN"

    def __bool__(self):
        return False


FORBIDDEN = _Forbidden()

# A cardinality score is either a finite float or FORBIDDEN.
ExtendedScore = Union[float, _Forbidden]


def is_forbidden(score: ExtendedScore) -> bool:
    return score is FORBIDDEN


def check_bag_label(value: int) -> int:
    if value not in (POSITIVE, NEGATIVE):
        raise ValueError(f"bag label must be +1 or -1, got {value!r}")
    return int(value)


@dataclass
class Instance:
    """One region's fixed-size feature vector."""

    features: np.ndarray
    source_region_id: Optional[int] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1)
        if self.features.size == 0:
            raise ValueError("instance features must be non-empty")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("instance features must be finite")

    @property
    def dim(self) -> int:
        return self.features.shape[0]


@dataclass
class Bag:
    """An ordered set of instances sharing one feature dimension.

    ``features`` is the (m, D) stacked matrix; ``region_ids`` (optional)
    records which segmentation region produced each row.
    """

    features: np.ndarray
    label: Optional[int] = None
    bag_id: str = ""
    region_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("bag needs an (m >= 1, D) feature matrix")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("bag features must be finite")
        if self.label is not None:
            self.label = check_bag_label(self.label)
        if self.region_ids is not None:
            self.region_ids = np.asarray(self.region_ids, dtype=np.int64)
            if self.region_ids.shape != (self.features.shape[0],):
                raise ValueError("region_ids length must equal m")

    @classmethod
    def from_instances(cls, instances: Sequence[Instance], label=None, bag_id=""):
        if len(instances) < 1:
            raise ValueError("a bag needs at least one instance")
        dims = {inst.dim for inst in instances}
        if len(dims) != 1:
            raise ValueError(f"instances disagree on dimension: {sorted(dims)}")
        feats = np.stack([inst.features for inst in instances])
        ids = None
        if all(inst.source_region_id is not None for inst in instances):
            ids = np.array([inst.source_region_id for inst in instances])
        return cls(feats, label=label, bag_id=bag_id, region_ids=ids)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def instances(self) -> list[Instance]:
        ids = self.region_ids if self.region_ids is not None else [None] * self.m
        return [Instance(row, rid if rid is None else int(rid))
                for row, rid in zip(self.features, ids)]


@dataclass
class InstanceLabeling:
    """Per-instance +1/-1 assignment for one bag."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if not np.all(np.isin(self.labels, (POSITIVE, NEGATIVE))):
            raise ValueError("instance labels must be +1 or -1")

    @property
    def m(self) -> int:
        return self.labels.shape[0]

    @property
    def m_pos(self) -> int:
        return int(np.sum(self.labels == POSITIVE))

    @property
    def m_neg(self) -> int:
        return int(np.sum(self.labels == NEGATIVE))


@dataclass(frozen=True)
class CardinalityModel:
    """Pair of cardinality functions scoring (m_pos, m_neg) per bag label.

    ``c_pos`` applies when the bag label is +1, ``c_neg`` when it is -1.
    Either may return FORBIDDEN. Only the standard assumption ships; the
    callable interface is the extension point for other assumptions.
    """

    kind: str
    c_pos: Callable[[int, int], ExtendedScore]
    c_neg: Callable[[int, int], ExtendedScore]

    def potential(self, m_pos: int, m_neg: int, bag_label: int) -> ExtendedScore:
        if m_pos < 0 or m_neg < 0:
            raise ValueError(f"counts must be non-negative, got ({m_pos}, {m_neg})")
        if m_pos + m_neg < 1:
            raise ValueError("a labeling has at least one instance")
        check_bag_label(bag_label)
        fn = self.c_pos if bag_label == POSITIVE else self.c_neg
        value = fn(m_pos, m_neg)
        if value is FORBIDDEN:
            return FORBIDDEN
        value = float(value)
        if not np.isfinite(value):
            raise ValueError("cardinality functions must return finite values "
                             "or FORBIDDEN")
        return value

    def score_table(self, m: int, bag_label: int) -> np.ndarray:
        """Scores for every positive count k = 0..m; -inf marks FORBIDDEN.

        The -inf entries never enter products, only max/plus selections.
        """
        check_bag_label(bag_label)
        if self.kind == STANDARD_MIL:
            table = np.zeros(m + 1)
            if bag_label == POSITIVE:
                table[0] = -np.inf
            else:
                table[1:] = -np.inf
            return table
        fn = self.c_pos if bag_label == POSITIVE else self.c_neg
        table = np.empty(m + 1)
        for k in range(m + 1):
            value = fn(k, m - k)
            table[k] = -np.inf if value is FORBIDDEN else float(value)
        return table


def _standard_c_pos(m_pos: int, m_neg: int) -> ExtendedScore:
    return FORBIDDEN if m_pos == 0 else 0.0


def _standard_c_neg(m_pos: int, m_neg: int) -> ExtendedScore:
    return 0.0 if m_pos == 0 else FORBIDDEN


def standard_mil() -> CardinalityModel:
    """At least one positive instance in a positive bag, none in a negative."""
    return CardinalityModel(STANDARD_MIL, _standard_c_pos, _standard_c_neg)


@dataclass
class ModelWeights:
    """Learned weight vector plus the metadata needed to use it safely.

    ``feature_fingerprint`` ties the model to the feature configuration it
    was trained under; prediction refuses mismatched fingerprints. When
    ``bias_included`` the final weight multiplies a constant-1 feature
    appended to each instance vector.
    """

    w: np.ndarray
    lam: float = 1.0
    feature_fingerprint: str = ""
    bias_included: bool = False

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if self.w.size == 0:
            raise ValueError("weights must be non-empty")
        if not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be finite")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    @property
    def feature_dim(self) -> int:
        """Instance feature dimension the model expects (bias excluded)."""
        return self.w.shape[0] - (1 if self.bias_included else 0)


@dataclass
class TrainConfig:
    """Solver settings for the max-margin objective.

    The outer loop alternates linearizing the concave part with solving the
    convex remainder; ``inner_solver`` picks how the convex bound is
    minimized. Steps in the subgradient solver follow eta0 / sqrt(t).
    """

    lam: float = 1.0
    max_outer_iters: int = 50
    inner_solver: str = "subgradient"  # or "cutting_plane"
    inner_tolerance: float = 1e-4
    outer_tolerance: float = 1e-6
    eta0: float = 1.0
    step_decay: str = "inv_sqrt"
    max_inner_iters: int = 300
    seed: int = 0
    bias_included: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not (self.inner_tolerance > 0 and self.outer_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.inner_solver not in ("subgradient", "cutting_plane"):
            raise ValueError(f"unknown inner solver {self.inner_solver!r}")
        if self.step_decay not in ("inv_sqrt", "constant"):
            raise ValueError(f"unknown step decay {self.step_decay!r}")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
