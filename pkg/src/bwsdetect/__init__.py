"""Weakly supervised detection of blue-whitish structures in dermoscopy images.

The package learns a bag-level classifier from image-level labels only,
localizing the feature by inferring per-region labels, and ships the two
threshold/palette baseline detectors it is compared against.

Subpackages: ``mil`` (model, inference, training), ``imaging`` (decoding,
lesion masking, segmentation), ``features`` (region descriptors, bag files),
``baselines`` (threshold and palette detectors), ``evalrun`` (datasets,
metrics, experiments, reports), plus the ``bwsdetect`` CLI.
"""

from .config import CliConfig, load_config
from .features.extract import FeatureConfig, bag_from_image
from .imaging.meanshift import MeanShiftParams
from .mil.inference import infer_labeling, predict_bag
from .mil.model_io import load_model, save_model
from .mil.training import train
from .mil.types import Bag, Instance, ModelWeights, TrainConfig, standard_mil

__version__ = "0.1.0"

__all__ = [
    "Bag", "Instance", "ModelWeights", "TrainConfig", "standard_mil",
    "train", "predict_bag", "infer_labeling", "save_model", "load_model",
    "FeatureConfig", "bag_from_image", "MeanShiftParams",
    "CliConfig", "load_config", "__version__",
]
