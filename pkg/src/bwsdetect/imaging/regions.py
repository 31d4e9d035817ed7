"""Region maps: segmentation output plus the in-lesion filter and grid mode."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .lesion import LesionMask


@dataclass
class Region:
    region_id: int
    pixels: Tuple[np.ndarray, np.ndarray]  # (row indices, col indices)
    centroid: Tuple[float, float]
    area: int
    in_lesion: bool = True
    mean_lab: Optional[np.ndarray] = None  # filled by mean-shift segmentation


@dataclass
class RegionMap:
    region_id: np.ndarray  # (h, w) int32, 0 = excluded
    regions: List[Region]

    def __post_init__(self):
        self.region_id = np.asarray(self.region_id, dtype=np.int32)

    @property
    def shape(self):
        return self.region_id.shape

    def kept_regions(self) -> List[Region]:
        return [r for r in self.regions if r.in_lesion]


def regions_from_label_plane(plane: np.ndarray,
                             mean_lab: Optional[np.ndarray] = None
                             ) -> RegionMap:
    """Build Region records for every positive id in a label plane."""
    plane = np.asarray(plane, dtype=np.int32)
    regions = []
    for rid in np.unique(plane):
        if rid == 0:
            continue
        ys, xs = np.nonzero(plane == rid)
        mean = None
        if mean_lab is not None:
            mean = mean_lab[ys, xs].mean(axis=0)
        regions.append(Region(
            region_id=int(rid), pixels=(ys, xs),
            centroid=(float(ys.mean()), float(xs.mean())),
            area=len(ys), mean_lab=mean))
    return RegionMap(plane, regions)


def grid_regions(img: np.ndarray, mask: LesionMask, cell: int) -> RegionMap:
    """Tile the lesion bounding box into cell x cell windows.

    Windows showing less than half lesion coverage are excluded; partial
    windows at the box edge are clipped and judged on their clipped extent.
    """
    if cell < 4:
        raise ValueError(f"cell must be >= 4, got {cell}")
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} != image {img.shape[:2]}")
    if mask.lesion_area == 0:
        raise ValueError("empty lesion mask")
    ys, xs = np.nonzero(mask.inside)
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    plane = np.zeros(mask.shape, dtype=np.int32)
    regions = []
    next_id = 1
    for wy in range(y0, y1, cell):
        for wx in range(x0, x1, cell):
            sl = (slice(wy, min(wy + cell, y1)), slice(wx, min(wx + cell, x1)))
            window = mask.inside[sl]
            if window.mean() < 0.5:
                continue
            plane[sl] = next_id
            ry, rx = np.nonzero(plane == next_id)
            regions.append(Region(
                region_id=next_id, pixels=(ry, rx),
                centroid=(float(ry.mean()), float(rx.mean())),
                area=len(ry), in_lesion=True))
            next_id += 1
    return RegionMap(plane, regions)


def filter_regions(rm: RegionMap, mask: LesionMask) -> RegionMap:
    """Mark regions in-lesion when at least half their pixels are inside."""
    if rm.shape != mask.shape:
        raise ValueError(f"region map {rm.shape} != mask {mask.shape}")
    regions = []
    for r in rm.regions:
        ys, xs = r.pixels
        inside = mask.inside[ys, xs].sum()
        regions.append(Region(
            region_id=r.region_id, pixels=r.pixels, centroid=r.centroid,
            area=r.area, in_lesion=bool(2 * inside >= r.area),
            mean_lab=r.mean_lab))
    return RegionMap(rm.region_id.copy(), regions)
