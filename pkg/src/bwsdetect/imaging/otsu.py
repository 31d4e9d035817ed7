"""Gray-level threshold selection by between-class variance."""

from __future__ import annotations

import numpy as np


def gray_histogram(gray: np.ndarray) -> np.ndarray:
    return np.bincount(np.asarray(gray, dtype=np.uint8).ravel(),
                       minlength=256).astype(np.int64)


def otsu_threshold(hist: np.ndarray) -> int:
    """Threshold t maximizing between-class variance; smallest t on ties.

    Pixels with value <= t form the dark class.
    """
    hist = np.asarray(hist, dtype=np.float64)
    if hist.shape != (256,):
        raise ValueError(f"expected a 256-bin histogram, got {hist.shape}")
    total = hist.sum()
    if total < 1:
        raise ValueError("histogram is empty")
    levels = np.arange(256)
    weight_dark = np.cumsum(hist)
    mass_dark = np.cumsum(hist * levels)
    weight_light = total - weight_dark
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_dark = mass_dark / weight_dark
        mu_light = (mass_dark[-1] - mass_dark) / weight_light
        variance = weight_dark * weight_light * (mu_dark - mu_light) ** 2
    variance = np.where(np.isfinite(variance), variance, 0.0)
    # argmax returns the first (smallest) maximizer
    return int(np.argmax(variance))
