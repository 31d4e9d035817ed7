"""Region feature vectors: concatenated color and texture histograms.

The feature dimension is a pure function of the configuration, and a
stable fingerprint of the configuration travels with every bag and model
so that a weight vector can never silently be applied to features laid
out differently.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import EmptyBagError, EmptyLesionError
from ..imaging.io import to_gray
from ..imaging.lesion import LesionMask, lesion_mask
from ..imaging.meanshift import MeanShiftParams, meanshift_segment
from ..imaging.regions import Region, RegionMap, filter_regions, grid_regions
from ..mil.types import Bag, Instance
from .color import lab_histogram, srgb_to_lab_image
from .lbp import lbp_histogram
from .mr8 import N_CHANNELS, mr8_histogram, mr8_responses

LAB_RANGES = ((0.0, 100.0), (-110.0, 110.0), (-110.0, 110.0))


@dataclass(frozen=True)
class FeatureConfig:
    lab_bin_size: float = 5.0
    lab_ranges: Tuple[Tuple[float, float], ...] = LAB_RANGES
    lbp_variants: Tuple[Tuple[int, float], ...] = ((8, 1.0), (16, 2.0))
    mr8_bins: int = 8
    mr8_clip: float = 3.0
    weber_constant: float = 0.03
    include_color: bool = True
    include_texture: bool = True

    def __post_init__(self):
        if self.lab_bin_size <= 0 or self.mr8_bins <= 0 or self.mr8_clip <= 0:
            raise ValueError("bin sizes and clip must be positive")
        if not (self.include_color or self.include_texture):
            raise ValueError("at least one feature family must be enabled")

    @property
    def color_dim(self) -> int:
        return sum(int(np.ceil((hi - lo) / self.lab_bin_size))
                   for lo, hi in self.lab_ranges)

    @property
    def lbp_dim(self) -> int:
        return sum(p + 2 for p, _ in self.lbp_variants)

    @property
    def mr8_dim(self) -> int:
        return N_CHANNELS * self.mr8_bins

    @property
    def dim(self) -> int:
        d = 0
        if self.include_color:
            d += self.color_dim
        if self.include_texture:
            d += self.lbp_dim + self.mr8_dim
        return d

    def fingerprint(self) -> str:
        payload = json.dumps({
            "lab_bin_size": self.lab_bin_size,
            "lab_ranges": self.lab_ranges,
            "lbp_variants": self.lbp_variants,
            "mr8_bins": self.mr8_bins,
            "mr8_clip": self.mr8_clip,
            "weber_constant": self.weber_constant,
            "include_color": self.include_color,
            "include_texture": self.include_texture,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class RegionFeatureExtractor:
    """Per-image context (Lab plane, texture responses) computed once."""

    def __init__(self, img: np.ndarray, cfg: Optional[FeatureConfig] = None):
        self.cfg = cfg or FeatureConfig()
        img = np.asarray(img)
        self.lab = srgb_to_lab_image(img) if self.cfg.include_color else None
        if self.cfg.include_texture:
            self.gray = to_gray(img)
            self.responses = mr8_responses(self.gray,
                                           self.cfg.weber_constant)
        else:
            self.gray = None
            self.responses = None

    def vector(self, region: Region) -> np.ndarray:
        ys, xs = region.pixels
        if len(ys) < 1:
            raise ValueError(f"region {region.region_id} is empty")
        blocks = []
        if self.cfg.include_color:
            blocks.append(lab_histogram(self.lab[ys, xs], self.cfg))
        if self.cfg.include_texture:
            blocks.append(lbp_histogram(self.gray, region.pixels, self.cfg))
            blocks.append(mr8_histogram(self.responses, region.pixels,
                                        self.cfg))
        return np.concatenate(blocks)


def region_feature_vector(img: np.ndarray, region: Region,
                          cfg: Optional[FeatureConfig] = None) -> Instance:
    """One region's Instance; prefer RegionFeatureExtractor for many regions."""
    extractor = RegionFeatureExtractor(img, cfg)
    return Instance(extractor.vector(region),
                    source_region_id=region.region_id)


def regions_for_image(img: np.ndarray, mask: LesionMask,
                      segmentation: str = "meanshift",
                      ms_params: Optional[MeanShiftParams] = None,
                      grid_cell: int = 16) -> RegionMap:
    if segmentation == "meanshift":
        return filter_regions(meanshift_segment(img, ms_params), mask)
    if segmentation == "grid":
        return grid_regions(img, mask, grid_cell)
    raise ValueError(f"unknown segmentation mode {segmentation!r}")


def bag_and_regions_from_image(
        img: np.ndarray, label: Optional[int] = None,
        cfg: Optional[FeatureConfig] = None,
        segmentation: str = "meanshift",
        ms_params: Optional[MeanShiftParams] = None,
        grid_cell: int = 16, bag_id: str = ""
) -> Tuple[Bag, RegionMap, LesionMask]:
    """Like bag_from_image, also returning the region map and lesion mask."""
    cfg = cfg or FeatureConfig()
    try:
        mask = lesion_mask(img)
    except EmptyLesionError as exc:
        raise EmptyBagError(f"bag {bag_id!r}: {exc}")
    region_map = regions_for_image(img, mask, segmentation, ms_params,
                                   grid_cell)
    kept = sorted(region_map.kept_regions(), key=lambda r: r.region_id)
    if not kept:
        raise EmptyBagError(
            f"bag {bag_id!r}: no region survived the in-lesion filter")
    extractor = RegionFeatureExtractor(img, cfg)
    instances = [Instance(extractor.vector(r), source_region_id=r.region_id)
                 for r in kept]
    bag = Bag.from_instances(instances, label=label, bag_id=bag_id)
    return bag, region_map, mask


def bag_from_image(img: np.ndarray, label: Optional[int] = None,
                   cfg: Optional[FeatureConfig] = None,
                   segmentation: str = "meanshift",
                   ms_params: Optional[MeanShiftParams] = None,
                   grid_cell: int = 16, bag_id: str = "") -> Bag:
    """Lesion mask -> regions -> in-lesion filter -> one instance per region."""
    bag, _, _ = bag_and_regions_from_image(
        img, label=label, cfg=cfg, segmentation=segmentation,
        ms_params=ms_params, grid_cell=grid_cell, bag_id=bag_id)
    return bag
