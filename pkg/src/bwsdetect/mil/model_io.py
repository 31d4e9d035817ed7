"""Versioned JSON persistence for trained weights.

Weights are written with 17 significant digits so that float64 values
round-trip exactly through the decimal representation.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import ConfigError, DataError
from .types import ModelWeights

MODEL_FORMAT_VERSION = 1


def model_to_json(weights: ModelWeights) -> str:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "D": weights.feature_dim,
        "lambda": weights.lam,
        "bias_included": weights.bias_included,
        "feature_fingerprint": weights.feature_fingerprint,
        "weights": "__WEIGHTS__",
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    body = "[" + ", ".join(f"{v:.17g}" for v in weights.w) + "]"
    return text.replace('"__WEIGHTS__"', body) + "\n"


def save_model(weights: ModelWeights, path: Union[str, Path]) -> None:
    Path(path).write_text(model_to_json(weights))


def load_model(path: Union[str, Path]) -> ModelWeights:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ConfigError(
            f"model file {path}: unsupported version {doc.get('version')!r}")
    try:
        w = np.asarray(doc["weights"], dtype=np.float64)
        weights = ModelWeights(
            w,
            lam=float(doc["lambda"]),
            feature_fingerprint=str(doc["feature_fingerprint"]),
            bias_included=bool(doc["bias_included"]),
        )
        declared_dim = int(doc["D"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"model file {path} is malformed: {exc}")
    if weights.feature_dim != declared_dim:
        raise DataError(
            f"model file {path}: declared D={declared_dim} does not match "
            f"{len(w)} stored weights (bias_included={weights.bias_included})")
    return weights
