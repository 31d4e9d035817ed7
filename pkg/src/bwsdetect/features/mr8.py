"""Maximum-response texture filter bank.

38 filters on a 49x49 support: first- and second-derivative-of-Gaussian
(edge / bar) filters at three scales and six orientations, plus an
isotropic Gaussian and a Laplacian of Gaussian. Taking the maximum over
the six orientations collapses the 36 oriented responses to 6, giving 8
orientation-invariant channels; the collapse compares response magnitudes,
since odd (edge) filters flip sign under half-turn rotations and a signed
maximum would not be rotation invariant. Every filter is made zero-mean
and L1-normalized; the input is standardized to zero mean, unit variance
and each response value is Weber-compressed.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.signal import fftconvolve

from ..errors import DataError, DegenerateFeatureWarning

SUPPORT = 49
_RADIUS = SUPPORT // 2
_SCALES = (1.0, 2.0, 4.0)
_N_ORIENT = 6
N_CHANNELS = 8


def _gauss1d(x: np.ndarray, sigma: float, order: int) -> np.ndarray:
    g = np.exp(-x ** 2 / (2.0 * sigma ** 2))
    if order == 1:
        g = -g * x
    elif order == 2:
        g = g * (x ** 2 - sigma ** 2)
    return g


def _normalize(f: np.ndarray) -> np.ndarray:
    f = f - f.mean()
    return f / np.abs(f).sum()


@lru_cache(maxsize=1)
def mr8_filter_bank() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(edge, bar, isotropic) filter stacks; edge/bar are (3, 6, 49, 49)."""
    grid = np.mgrid[-_RADIUS:_RADIUS + 1, -_RADIUS:_RADIUS + 1]
    pts = np.stack([grid[1].ravel(), grid[0].ravel()])  # (x, y) rows
    edge = np.empty((len(_SCALES), _N_ORIENT, SUPPORT, SUPPORT))
    bar = np.empty_like(edge)
    for si, sigma in enumerate(_SCALES):
        for oi in range(_N_ORIENT):
            angle = np.pi * oi / _N_ORIENT
            c, s = np.cos(angle), np.sin(angle)
            rot = np.array([[c, -s], [s, c]]) @ pts
            gx = _gauss1d(rot[0], 3.0 * sigma, 0)
            edge[si, oi] = _normalize(
                (gx * _gauss1d(rot[1], sigma, 1)).reshape(SUPPORT, SUPPORT))
            bar[si, oi] = _normalize(
                (gx * _gauss1d(rot[1], sigma, 2)).reshape(SUPPORT, SUPPORT))
    radius = np.sqrt(grid[0] ** 2 + grid[1] ** 2)
    gauss = _normalize(np.exp(-radius ** 2 / (2.0 * 10.0 ** 2)))
    log = _normalize((radius ** 2 - 2.0 * 10.0 ** 2)
                     * np.exp(-radius ** 2 / (2.0 * 10.0 ** 2)))
    return edge, bar, np.stack([gauss, log])


def _weber(resp: np.ndarray, constant: float) -> np.ndarray:
    mag = np.abs(resp)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resp * np.log1p(mag / constant) / mag
    return np.where(mag > 0, scaled, 0.0)


def mr8_responses(gray: np.ndarray, weber_constant: float = 0.03
                  ) -> np.ndarray:
    """(8, h, w) response planes: 3 edge + 3 bar scales, Gaussian, LoG."""
    gray = np.asarray(gray, dtype=np.float64)
    h, w = gray.shape
    if h < SUPPORT or w < SUPPORT:
        raise DataError(
            f"image {h}x{w} too small for the texture filter bank; "
            f"minimum is {SUPPORT}x{SUPPORT}")
    std = gray.std()
    if std == 0:
        warnings.warn("constant image: texture responses are all zero",
                      DegenerateFeatureWarning)
        return np.zeros((N_CHANNELS, h, w))
    norm = (gray - gray.mean()) / std
    padded = np.pad(norm, _RADIUS, mode="reflect")

    def convolve(kernel):
        return fftconvolve(padded, kernel, mode="valid")

    edge, bar, iso = mr8_filter_bank()
    planes = []
    for stack in (edge, bar):
        for si in range(stack.shape[0]):
            oriented = [np.abs(convolve(stack[si, oi]))
                        for oi in range(stack.shape[1])]
            planes.append(np.maximum.reduce(oriented))
    planes.append(convolve(iso[0]))
    planes.append(convolve(iso[1]))
    return _weber(np.stack(planes), weber_constant)


def mr8_histogram(responses: np.ndarray,
                  region_pixels: Tuple[np.ndarray, np.ndarray],
                  cfg) -> np.ndarray:
    """Per-channel histograms of clipped responses, L1 per channel."""
    ys, xs = region_pixels
    if len(ys) < 1:
        raise ValueError("empty region")
    clip = cfg.mr8_clip
    n_bins = cfg.mr8_bins
    width = 2.0 * clip / n_bins
    blocks = []
    for channel in responses:
        vals = np.clip(channel[ys, xs], -clip, clip)
        bins = np.minimum(np.floor((vals + clip) / width).astype(np.int64),
                          n_bins - 1)
        hist = np.bincount(bins, minlength=n_bins).astype(np.float64)
        blocks.append(hist / hist.sum())
    return np.concatenate(blocks)
