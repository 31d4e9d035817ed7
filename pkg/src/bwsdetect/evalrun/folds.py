"""Stratified k-fold splitting, deterministic under a seed."""

from __future__ import annotations

from typing import List

import numpy as np

from ..errors import DataError
from .manifest import DatasetManifest, ManifestEntry


def stratified_fold_indices(labels, k: int, seed: int) -> List[np.ndarray]:
    """Partition indices into k folds, balancing each label class.

    Indices of each class are shuffled and dealt round-robin, so per-class
    fold sizes differ by at most one.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise DataError(f"cannot split {n} entries into {k} folds")
    rng = np.random.default_rng(seed)
    folds: List[list] = [[] for _ in range(k)]
    for value in sorted(set(labels.tolist())):
        idx = np.nonzero(labels == value)[0]
        rng.shuffle(idx)
        for pos, index in enumerate(idx):
            folds[pos % k].append(int(index))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def kfold_split(manifest: DatasetManifest, k: int = 3,
                seed: int = 0) -> List[List[ManifestEntry]]:
    folds = stratified_fold_indices(manifest.labels(), k, seed)
    return [[manifest.entries[i] for i in fold] for fold in folds]
