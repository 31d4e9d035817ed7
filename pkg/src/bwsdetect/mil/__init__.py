"""Multi-instance model: types, exact inference, and max-margin training."""

from .inference import (
    bag_score,
    cardinality_potential,
    infer_labeling,
    instance_potential,
    instance_scores,
    predict_bag,
)
from .model_io import load_model, model_to_json, save_model
from .training import TrainTrace, loss_augmented_score, objective, train
from .types import (
    CUSTOM,
    FORBIDDEN,
    NEGATIVE,
    POSITIVE,
    STANDARD_MIL,
    Bag,
    CardinalityModel,
    Instance,
    InstanceLabeling,
    ModelWeights,
    TrainConfig,
    is_forbidden,
    standard_mil,
)

__all__ = [
    "Bag", "CardinalityModel", "Instance", "InstanceLabeling", "ModelWeights",
    "TrainConfig", "TrainTrace", "FORBIDDEN", "POSITIVE", "NEGATIVE",
    "STANDARD_MIL", "CUSTOM", "standard_mil", "is_forbidden",
    "instance_potential", "cardinality_potential", "bag_score",
    "infer_labeling", "predict_bag", "instance_scores",
    "loss_augmented_score", "objective", "train",
    "save_model", "load_model", "model_to_json",
]
