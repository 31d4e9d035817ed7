"""Versioned JSON bag files, decoupling imaging from training."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ..errors import ConfigError, DataError
from ..mil.types import Bag

BAG_FORMAT_VERSION = 1


def bag_to_json(bag: Bag, fingerprint: str) -> str:
    ids = bag.region_ids if bag.region_ids is not None else [None] * bag.m
    instances = [
        {"region_id": None if rid is None else int(rid),
         "features": [float(v) for v in row]}
        for rid, row in zip(ids, bag.features)
    ]
    doc = {
        "version": BAG_FORMAT_VERSION,
        "bag_id": bag.bag_id,
        "label": bag.label,
        "m": bag.m,
        "D": bag.dim,
        "fingerprint": fingerprint,
        "instances": instances,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_bag(bag: Bag, fingerprint: str, path: Union[str, Path]) -> None:
    Path(path).write_text(bag_to_json(bag, fingerprint))


def load_bag(path: Union[str, Path]) -> Tuple[Bag, str]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"bag file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"bag file {path} is not valid JSON: {exc}")
    if doc.get("version") != BAG_FORMAT_VERSION:
        raise ConfigError(
            f"bag file {path}: unsupported version {doc.get('version')!r}")
    try:
        feats = np.array([inst["features"] for inst in doc["instances"]],
                         dtype=np.float64)
        rids = [inst.get("region_id") for inst in doc["instances"]]
        region_ids = (np.array(rids, dtype=np.int64)
                      if all(r is not None for r in rids) and rids else None)
        bag = Bag(feats, label=doc["label"], bag_id=str(doc["bag_id"]),
                  region_ids=region_ids)
        declared_m, declared_d = int(doc["m"]), int(doc["D"])
        fingerprint = str(doc["fingerprint"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bag file {path} is malformed: {exc}")
    if (bag.m, bag.dim) != (declared_m, declared_d):
        raise DataError(
            f"bag file {path}: declared m={declared_m}, D={declared_d} but "
            f"instances are {bag.m}x{bag.dim}")
    return bag, fingerprint
