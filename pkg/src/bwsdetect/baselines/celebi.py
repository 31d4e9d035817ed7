"""Pixel-threshold detector driven by normalized blue and relative red.

Healthy skin is sampled from a band outside the dilated lesion border; its
mean red level anchors the relative-red feature rR = R - mean_red. A pixel
is flagged when nB = B/(R+G+B) >= 0.3 and -194 <= rR < -51. The stated rR
range is only satisfiable by the subtraction form, so that reading is
implemented. Border dilation uses a disk whose radius adds a band of about
10% of the lesion area (radius ~ 0.1 * area / perimeter).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..imaging.lesion import LesionMask

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)

NB_THRESHOLD = 0.3
RR_LOW = -194.0
RR_HIGH = -51.0
HEALTHY_RED_MIN = 90


@dataclass
class DetectionMask:
    mask: np.ndarray  # (h, w) bool
    abstained: bool = False

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def positive_pixel_count(self) -> int:
        return int(self.mask.sum())

    @property
    def shape(self):
        return self.mask.shape


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    return yy ** 2 + xx ** 2 <= radius ** 2


def healthy_skin_mask(img: np.ndarray) -> np.ndarray:
    """R > 90 and R > B and R > G, elementwise."""
    r = img[..., 0].astype(np.int64)
    g = img[..., 1].astype(np.int64)
    b = img[..., 2].astype(np.int64)
    return (r > HEALTHY_RED_MIN) & (r > b) & (r > g)


def classify_bws_pixels(img: np.ndarray, mean_red_healthy: float
                        ) -> np.ndarray:
    """Threshold rule on (nB, rR) given the healthy-skin mean red level."""
    rgb = img.astype(np.float64)
    total = rgb.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        nb = rgb[..., 2] / total
    nb = np.where(total > 0, nb, 0.0)
    rr = rgb[..., 0] - mean_red_healthy
    return (nb >= NB_THRESHOLD) & (rr >= RR_LOW) & (rr < RR_HIGH)


def outside_band(mask: LesionMask, band_area: float,
                 dilate_radius: int) -> np.ndarray:
    """Ring outside the dilated lesion holding about band_area pixels."""
    dilated = ndimage.binary_dilation(mask.inside, _disk(dilate_radius))
    grown = dilated
    while True:
        band = grown & ~dilated
        if band.sum() >= band_area:
            return band
        next_grown = ndimage.binary_dilation(grown, _EIGHT)
        if next_grown.sum() == grown.sum():
            return band  # image exhausted
        grown = next_grown


def celebi_detect(img: np.ndarray, mask: LesionMask) -> DetectionMask:
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask {mask.shape} does not match image "
                         f"{img.shape[:2]}")
    area = mask.lesion_area
    if area < 1:
        raise ValueError("empty lesion mask")
    border = mask.inside & ~ndimage.binary_erosion(mask.inside, _FOUR)
    perimeter = max(int(border.sum()), 1)
    radius = max(1, round(0.1 * area / perimeter))
    band = outside_band(mask, 0.2 * area, radius)
    healthy = band & healthy_skin_mask(img)
    if not healthy.any():
        warnings.warn("no healthy-skin pixel found outside the lesion; "
                      "detector abstains")
        return DetectionMask(np.zeros(img.shape[:2], dtype=bool),
                             abstained=True)
    mean_red = float(img[..., 0][healthy].mean())
    return DetectionMask(classify_bws_pixels(img, mean_red))
