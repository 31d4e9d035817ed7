"""Global CLI configuration: a TOML or JSON file plus flag overrides.

Unknown keys are rejected rather than ignored, and the effective
configuration is echoed into every output so results stay traceable.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .errors import ConfigError
from .features.extract import FeatureConfig
from .imaging.meanshift import MeanShiftParams
from .mil.types import TrainConfig

# config-file key -> TrainConfig field
_TRAIN_KEY_MAP = {
    "lambda": "lam",
    "bias": "bias_included",
}


@dataclass
class CliConfig:
    seed: int = 0
    threads: int = 1
    folds: int = 3
    segmentation: str = "meanshift"
    grid_cell: int = 16
    min_fraction: float = 0.0
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    meanshift: MeanShiftParams = field(default_factory=MeanShiftParams)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.segmentation not in ("meanshift", "grid"):
            raise ConfigError(
                f"unknown segmentation mode {self.segmentation!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")

    def echo(self) -> dict:
        """Effective configuration as a JSON-ready dictionary."""
        doc = {
            "seed": self.seed,
            "threads": self.threads,
            "folds": self.folds,
            "segmentation": self.segmentation,
            "grid_cell": self.grid_cell,
            "min_fraction": self.min_fraction,
            "feature": dataclasses.asdict(self.feature),
            "meanshift": dataclasses.asdict(self.meanshift),
            "train": dataclasses.asdict(self.train),
        }
        doc["feature"]["fingerprint"] = self.feature.fingerprint()
        return json.loads(json.dumps(doc))  # tuples -> lists


def _reject_unknown(section: dict, allowed, where: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where}: "
                          f"{', '.join(unknown)}")


def _build_section(cls, section: dict, where: str, key_map=None):
    key_map = key_map or {}
    known = {f.name for f in fields(cls)}
    allowed = (known - set(key_map.values())) | set(key_map)
    _reject_unknown(section, allowed, where)
    kwargs = {}
    for key, value in section.items():
        name = key_map.get(key, key)
        if isinstance(value, list):  # TOML arrays for tuple fields
            value = tuple(tuple(v) if isinstance(v, list) else v
                          for v in value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where} configuration: {exc}")


_TOP_KEYS = ("seed", "threads", "folds", "segmentation", "grid_cell",
             "min_fraction", "feature", "meanshift", "train")


def config_from_dict(doc: dict) -> CliConfig:
    _reject_unknown(doc, _TOP_KEYS, "config")
    feature = _build_section(FeatureConfig, doc.get("feature", {}),
                             "[feature]")
    meanshift = _build_section(MeanShiftParams, doc.get("meanshift", {}),
                               "[meanshift]")
    train = _build_section(TrainConfig, doc.get("train", {}), "[train]",
                           key_map=_TRAIN_KEY_MAP)
    top = {k: v for k, v in doc.items()
           if k not in ("feature", "meanshift", "train")}
    try:
        return CliConfig(feature=feature, meanshift=meanshift, train=train,
                         **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}")


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[dict] = None) -> CliConfig:
    """Read the config file (if any) and apply flag overrides on top.

    Overrides use dotted keys, e.g. {"seed": 3, "train.lambda": 0.5}.
    """
    doc: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        elif path.suffix.lower() == ".json":
            doc = json.loads(path.read_text())
        else:
            raise ConfigError(
                f"config file must be .toml or .json, got {path.suffix!r}")
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        parts = dotted.split(".")
        target = doc
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = value
    return config_from_dict(doc)
