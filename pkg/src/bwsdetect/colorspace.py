"""sRGB to CIE Lab conversion (D65 white point, 2-degree observer)."""

from __future__ import annotations

import numpy as np

# linear RGB -> XYZ, D65
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_WHITE = np.array([0.95047, 1.0, 1.08883])
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


def srgb_to_lab_image(img: np.ndarray) -> np.ndarray:
    """Convert an (..., 3) uint8 sRGB array to float64 Lab."""
    rgb = np.asarray(img, dtype=np.float64) / 255.0
    linear = np.where(rgb > 0.04045,
                      ((rgb + 0.055) / 1.055) ** 2.4,
                      rgb / 12.92)
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _WHITE
    f = np.where(ratio > _EPS,
                 np.cbrt(ratio),
                 (_KAPPA * ratio + 16.0) / 116.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def srgb_to_lab(r: int, g: int, b: int) -> tuple[float, float, float]:
    """Convert one 8-bit sRGB triple to (L, a, b)."""
    for name, v in (("r", r), ("g", g), ("b", b)):
        if not 0 <= v <= 255:
            raise ValueError(f"channel {name}={v} outside [0, 255]")
    lab = srgb_to_lab_image(np.array([[r, g, b]], dtype=np.float64))
    return float(lab[0, 0]), float(lab[0, 1]), float(lab[0, 2])
