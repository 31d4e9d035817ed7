"""Lesion/background separation.

Otsu's threshold on the luma plane, the darker class taken as lesion
candidate, reduced to its largest 8-connected component with holes filled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import EmptyLesionError
from .io import to_gray
from .otsu import gray_histogram, otsu_threshold

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class LesionMask:
    inside: np.ndarray  # (h, w) bool

    def __post_init__(self):
        self.inside = np.asarray(self.inside, dtype=bool)

    @property
    def lesion_area(self) -> int:
        return int(self.inside.sum())

    @property
    def shape(self):
        return self.inside.shape


def lesion_mask(img: np.ndarray) -> LesionMask:
    gray = to_gray(img)
    hist = gray_histogram(gray)
    if np.count_nonzero(hist) < 2:
        raise EmptyLesionError("image has a single gray level; no lesion")
    threshold = otsu_threshold(hist)
    dark = gray <= threshold
    if not dark.any() or dark.all():
        raise EmptyLesionError(
            f"threshold {threshold} separates no foreground")
    labels, count = ndimage.label(dark, structure=_EIGHT)
    if count == 0:
        raise EmptyLesionError("no dark component found")
    sizes = np.bincount(labels.ravel())[1:]
    largest = int(np.argmax(sizes)) + 1  # first max -> lowest label id
    component = labels == largest
    filled = ndimage.binary_fill_holes(component)
    return LesionMask(filled)
