"""Image decoding, lesion masking, and region extraction."""

from .io import (
    load_image,
    overlay_png,
    save_image,
    save_label_png,
    save_mask_png,
    to_gray,
)
from .lesion import LesionMask, lesion_mask
from .meanshift import MeanShiftParams, meanshift_segment
from .otsu import gray_histogram, otsu_threshold
from .regions import (
    Region,
    RegionMap,
    filter_regions,
    grid_regions,
    regions_from_label_plane,
)

__all__ = [
    "load_image", "save_image", "to_gray", "save_mask_png", "save_label_png",
    "overlay_png", "gray_histogram", "otsu_threshold",
    "LesionMask", "lesion_mask",
    "MeanShiftParams", "meanshift_segment",
    "Region", "RegionMap", "grid_regions", "filter_regions",
    "regions_from_label_plane",
]
