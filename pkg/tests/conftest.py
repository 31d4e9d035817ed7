import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")

from bwsdetect.mil import (  # noqa: E402
    FORBIDDEN,
    Bag,
    CardinalityModel,
    InstanceLabeling,
    ModelWeights,
    bag_score,
)


def brute_force_inference(w: ModelWeights, model: CardinalityModel, bag: Bag,
                          bag_label: int):
    """Exhaustive max of bag_score over all 2^m labelings; the oracle."""
    best = None
    for bits in itertools.product((-1, 1), repeat=bag.m):
        labeling = InstanceLabeling(np.array(bits))
        score = bag_score(w, model, bag, labeling, bag_label)
        if score is FORBIDDEN:
            continue
        if best is None or score > best[0]:
            best = (score, labeling)
    return best  # None when every labeling is forbidden


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def score_bag(scores):
    """Bag whose instances are 1-D features equal to the wanted w.x scores."""
    return Bag(np.asarray(scores, dtype=float).reshape(-1, 1))


UNIT_W = ModelWeights(np.array([1.0]))
