"""The two comparison detectors: pixel thresholds and palette matching."""

from .celebi import (
    DetectionMask,
    celebi_detect,
    classify_bws_pixels,
    healthy_skin_mask,
)
from .palette import (
    MunsellPalette,
    PalettePatch,
    load_munsell_table,
    load_palette,
    nearest_patch,
    palette_build,
    palette_detect,
    save_palette,
)

__all__ = [
    "DetectionMask", "celebi_detect", "classify_bws_pixels",
    "healthy_skin_mask",
    "MunsellPalette", "PalettePatch", "palette_build", "palette_detect",
    "nearest_patch", "load_munsell_table", "save_palette", "load_palette",
]
