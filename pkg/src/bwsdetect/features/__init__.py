"""Region feature extraction: Lab color, LBP, and MR8 texture histograms."""

from .bagfile import bag_to_json, load_bag, save_bag
from .color import channel_histogram, lab_histogram, srgb_to_lab, srgb_to_lab_image
from .extract import (
    FeatureConfig,
    RegionFeatureExtractor,
    bag_and_regions_from_image,
    bag_from_image,
    region_feature_vector,
    regions_for_image,
)
from .lbp import lbp_codes, lbp_histogram
from .mr8 import mr8_filter_bank, mr8_histogram, mr8_responses

__all__ = [
    "FeatureConfig", "RegionFeatureExtractor", "bag_from_image",
    "bag_and_regions_from_image", "region_feature_vector",
    "regions_for_image",
    "srgb_to_lab", "srgb_to_lab_image", "lab_histogram", "channel_histogram",
    "lbp_codes", "lbp_histogram",
    "mr8_filter_bank", "mr8_responses", "mr8_histogram",
    "save_bag", "load_bag", "bag_to_json",
]
