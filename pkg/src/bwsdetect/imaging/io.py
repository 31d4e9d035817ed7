"""Image decoding and debug-image export.

Images are (h, w, 3) uint8 sRGB arrays throughout the package. 16-bit
inputs are reduced to 8 bits by dropping the low byte.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import ImageReadError


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Decode a PNG or JPEG into an (h, w, 3) uint8 sRGB array."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.uint32)
                arr = (arr >> 8).astype(np.uint8)  # keep the high byte
                return np.stack([arr] * 3, axis=-1)
            # Pillow already keeps only the high byte of 16-bit RGB PNGs
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError:
        raise ImageReadError(f"image not found: {path}")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageReadError(f"cannot decode image {path}: {exc}")


def save_image(img: np.ndarray, path: Union[str, Path]) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path, format="PNG")


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luma plane: round(0.299 R + 0.587 G + 0.114 B), uint8."""
    img = np.asarray(img)
    luma = (0.299 * img[..., 0].astype(np.float64)
            + 0.587 * img[..., 1]
            + 0.114 * img[..., 2])
    return np.floor(luma + 0.5).astype(np.uint8)


def save_mask_png(mask: np.ndarray, path: Union[str, Path]) -> None:
    """Boolean mask to black/white PNG."""
    Image.fromarray((np.asarray(mask, bool) * np.uint8(255))).save(
        path, format="PNG")


def save_label_png(label_plane: np.ndarray, path: Union[str, Path]) -> None:
    """Region-id plane to a 16-bit grayscale PNG (0 = excluded)."""
    plane = np.asarray(label_plane)
    if plane.max(initial=0) > 0xFFFF:
        raise ValueError("more than 65535 regions cannot be exported")
    Image.fromarray(plane.astype(np.uint16)).save(path, format="PNG")


def overlay_png(img: np.ndarray, mask: np.ndarray, path: Union[str, Path],
                tint=(255, 0, 0), strength: float = 0.45) -> None:
    """Write the image with masked pixels blended toward a tint color."""
    img = np.asarray(img, dtype=np.float64)
    out = img.copy()
    tint_arr = np.asarray(tint, dtype=np.float64)
    out[np.asarray(mask, bool)] = (
        (1.0 - strength) * img[np.asarray(mask, bool)] + strength * tint_arr)
    save_image(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8), path)
