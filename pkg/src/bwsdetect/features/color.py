"""Color features: per-channel Lab histograms with uniform bins."""

from __future__ import annotations

import numpy as np

from ..colorspace import srgb_to_lab, srgb_to_lab_image  # noqa: F401 (re-export)


def channel_histogram(values: np.ndarray, lo: float, hi: float,
                      bin_size: float) -> np.ndarray:
    """Uniform histogram over [lo, hi], values clamped, top edge closed."""
    n_bins = int(np.ceil((hi - lo) / bin_size))
    clamped = np.clip(values, lo, hi)
    bins = np.floor((clamped - lo) / bin_size).astype(np.int64)
    bins = np.minimum(bins, n_bins - 1)
    hist = np.bincount(bins, minlength=n_bins).astype(np.float64)
    return hist / hist.sum()


def lab_histogram(lab_pixels: np.ndarray, cfg) -> np.ndarray:
    """Concatenated L / a / b histograms, each block L1-normalized."""
    lab_pixels = np.asarray(lab_pixels, dtype=np.float64)
    if lab_pixels.ndim != 2 or lab_pixels.shape[1] != 3 \
            or lab_pixels.shape[0] < 1:
        raise ValueError("need a non-empty (n, 3) Lab pixel array")
    blocks = [
        channel_histogram(lab_pixels[:, i], lo, hi, cfg.lab_bin_size)
        for i, (lo, hi) in enumerate(cfg.lab_ranges)
    ]
    return np.concatenate(blocks)
