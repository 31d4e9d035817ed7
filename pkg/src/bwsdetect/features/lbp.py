"""Rotation-invariant uniform local binary patterns over a pixel set.

For each (P, R) variant the P circle neighbors are sampled by bilinear
interpolation; a pattern is uniform when its circular bit string has at
most two 0/1 transitions, and its code is then the count of one bits
(0..P); all non-uniform patterns share the single code P + 1.
"""

from __future__ import annotations

import warnings
from typing import Tuple

import numpy as np

from ..errors import DegenerateFeatureWarning

# neighbors within this relative tolerance of the center count as equal
# (>= center), so bilinear rounding cannot break flat regions
_EQ_TOL = 1e-9


def _circle_offsets(p: int, r: float) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(p) / p
    offsets = np.stack([r * np.sin(angles), r * np.cos(angles)], axis=1)
    snapped = np.round(offsets)
    close = np.abs(offsets - snapped) < 1e-9
    return np.where(close, snapped, offsets)


def lbp_codes(gray: np.ndarray, ys: np.ndarray, xs: np.ndarray,
              p: int, r: float) -> np.ndarray:
    """riu2 codes for the given centers; caller guarantees full neighborhoods."""
    gray = np.asarray(gray, dtype=np.float64)
    center = gray[ys, xs]
    bits = np.empty((p, len(ys)), dtype=np.int8)
    for k, (dy, dx) in enumerate(_circle_offsets(p, r)):
        sy = ys + dy
        sx = xs + dx
        y0 = np.floor(sy).astype(np.int64)
        x0 = np.floor(sx).astype(np.int64)
        ty = sy - y0
        tx = sx - x0
        y1 = np.minimum(y0 + 1, gray.shape[0] - 1)
        x1 = np.minimum(x0 + 1, gray.shape[1] - 1)
        sample = ((1 - ty) * (1 - tx) * gray[y0, x0]
                  + (1 - ty) * tx * gray[y0, x1]
                  + ty * (1 - tx) * gray[y1, x0]
                  + ty * tx * gray[y1, x1])
        bits[k] = sample >= center - _EQ_TOL * (np.abs(center) + 1.0)
    ones = bits.sum(axis=0)
    transitions = np.abs(np.diff(bits, axis=0, append=bits[:1])).sum(axis=0)
    return np.where(transitions <= 2, ones, p + 1).astype(np.int64)


def lbp_histogram(gray: np.ndarray, region_pixels: Tuple[np.ndarray, np.ndarray],
                  cfg) -> np.ndarray:
    """Concatenated riu2 histograms (P + 2 bins per variant), L1 per variant.

    Region pixels whose circle leaves the image are skipped; a variant with
    no usable pixel contributes a zero block and raises a warning.
    """
    gray = np.asarray(gray)
    h, w = gray.shape
    ys, xs = (np.asarray(v, dtype=np.int64) for v in region_pixels)
    blocks = []
    for p, r in cfg.lbp_variants:
        margin = int(np.ceil(r))
        keep = ((ys >= margin) & (ys < h - margin)
                & (xs >= margin) & (xs < w - margin))
        if not keep.any():
            warnings.warn(
                f"LBP(P={p}, R={r}): region has no interior pixel; "
                f"block zeroed", DegenerateFeatureWarning)
            blocks.append(np.zeros(p + 2))
            continue
        codes = lbp_codes(gray, ys[keep], xs[keep], p, r)
        hist = np.bincount(codes, minlength=p + 2).astype(np.float64)
        blocks.append(hist / hist.sum())
    return np.concatenate(blocks)
