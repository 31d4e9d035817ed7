"""Pixel-detection to image-label propagation.

An image is positive when enough detected pixels fall inside the lesion;
detections outside it (ruler markings, bluish artifacts) never count. The
default threshold is a single inside pixel.
"""

from __future__ import annotations

from ..baselines.celebi import DetectionMask
from ..imaging.lesion import LesionMask
from ..mil.types import NEGATIVE, POSITIVE


def propagate_labels(det: DetectionMask, lesion: LesionMask,
                     min_fraction: float = 0.0) -> int:
    if det.shape != lesion.shape:
        raise ValueError(f"detection {det.shape} vs lesion {lesion.shape}")
    if min_fraction < 0:
        raise ValueError("min_fraction must be >= 0")
    inside = int((det.mask & lesion.inside).sum())
    required = min_fraction * lesion.lesion_area if min_fraction > 0 else 1
    return POSITIVE if inside >= required else NEGATIVE
