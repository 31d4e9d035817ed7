"""End-to-end experiment runs: k-fold or cross-dataset, any method.

The learned method trains on bags (extracted from images or loaded from
bag files) and predicts bag labels directly; the two detector baselines
run without training and reach an image label through the lesion-inside
propagation rule.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from ..baselines.celebi import celebi_detect
from ..baselines.palette import load_palette, palette_detect
from ..errors import ConfigError, DataError, FingerprintMismatchError
from ..features.bagfile import load_bag
from ..features.extract import FeatureConfig, bag_from_image
from ..imaging.io import load_image, overlay_png
from ..imaging.lesion import lesion_mask
from ..imaging.meanshift import MeanShiftParams, meanshift_segment
from ..mil.inference import predict_bag
from ..mil.training import train
from ..mil.types import Bag, ModelWeights, TrainConfig, standard_mil
from .folds import stratified_fold_indices
from .manifest import DatasetManifest, ManifestEntry
from .metrics import EvalReport, metrics, pooled_report
from .postprocess import propagate_labels

METHODS = ("mimn", "celebi", "palette")


@dataclass
class ExperimentConfig:
    method: str = "mimn"
    folds: int = 3
    seed: int = 0
    segmentation: str = "meanshift"
    grid_cell: int = 16
    min_fraction: float = 0.0
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    meanshift: MeanShiftParams = field(default_factory=MeanShiftParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    palette_path: Optional[Union[str, Path]] = None
    threads: int = 1
    overlay_dir: Optional[Union[str, Path]] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; "
                              f"choose one of {METHODS}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


def _map_entries(entries, fn, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, entries))
    return [fn(e) for e in entries]


def bag_for_entry(entry: ManifestEntry, cfg: ExperimentConfig
                  ) -> Tuple[Bag, str]:
    if entry.is_bagfile:
        bag, fingerprint = load_bag(entry.path)
        bag.label = entry.label
        bag.bag_id = entry.entry_id
        return bag, fingerprint
    img = load_image(entry.path)
    bag = bag_from_image(img, label=entry.label, cfg=cfg.feature,
                         segmentation=cfg.segmentation,
                         ms_params=cfg.meanshift, grid_cell=cfg.grid_cell,
                         bag_id=entry.entry_id)
    return bag, cfg.feature.fingerprint()


def collect_bags(entries: List[ManifestEntry], cfg: ExperimentConfig
                 ) -> Tuple[List[Bag], str]:
    """Load or extract all bags; they must agree on one fingerprint."""
    results = _map_entries(entries, lambda e: bag_for_entry(e, cfg),
                           cfg.threads)
    fingerprints = {fp for _, fp in results}
    if len(fingerprints) > 1:
        raise FingerprintMismatchError(*sorted(fingerprints)[:2])
    return [bag for bag, _ in results], fingerprints.pop()


def augment_for_model(bag: Bag, model: ModelWeights) -> Bag:
    """Append the constant-1 bias column when the model was trained with one."""
    if not model.bias_included:
        return bag
    return Bag(np.hstack([bag.features, np.ones((bag.m, 1))]),
               label=bag.label, bag_id=bag.bag_id, region_ids=bag.region_ids)


def _predict_records(model: ModelWeights, bags: List[Bag],
                     entries: List[ManifestEntry], fold: Optional[int]):
    smil = standard_mil()
    records = []
    for bag, entry in zip(bags, entries):
        label, labeling = predict_bag(model, smil, augment_for_model(bag,
                                                                     model))
        positive_ids = []
        if bag.region_ids is not None:
            positive_ids = bag.region_ids[labeling.labels == 1].tolist()
        records.append({
            "id": entry.entry_id,
            "fold": fold,
            "truth": entry.label,
            "predicted": label,
            "m": bag.m,
            "positive_instances": labeling.m_pos,
            "_positive_region_ids": positive_ids,
            "_entry": entry,
        })
    return records


def positive_region_mask(img, region_ids, cfg: ExperimentConfig):
    """Pixel mask of the listed segmentation regions (recomputed, exact)."""
    from ..features.extract import regions_for_image

    mask = lesion_mask(img)
    region_map = regions_for_image(img, mask, cfg.segmentation,
                                   cfg.meanshift, cfg.grid_cell)
    wanted = set(int(r) for r in region_ids)
    out = np.zeros(img.shape[:2], dtype=bool)
    for region in region_map.regions:
        if region.region_id in wanted:
            out[region.pixels] = True
    return out


def _write_mimn_overlays(records, cfg: ExperimentConfig):
    overlay_dir = Path(cfg.overlay_dir)
    overlay_dir.mkdir(parents=True, exist_ok=True)
    for rec in records:
        entry = rec["_entry"]
        if entry.is_bagfile:
            continue  # no pixels to paint
        img = load_image(entry.path)
        mask = positive_region_mask(img, rec["_positive_region_ids"], cfg)
        overlay_png(img, mask, overlay_dir / f"{entry.entry_id}.png")


def _strip_private(records):
    public = []
    for rec in records:
        out = {k: v for k, v in rec.items() if not k.startswith("_")}
        out["positive_regions"] = " ".join(
            str(r) for r in rec.get("_positive_region_ids", []))
        public.append(out)
    return public


def _run_mimn(manifest: DatasetManifest, cfg: ExperimentConfig,
              test_manifest: Optional[DatasetManifest]):
    bags, fingerprint = collect_bags(manifest.entries, cfg)
    if test_manifest is not None:
        model, _ = train(bags, cfg.train, feature_fingerprint=fingerprint)
        test_bags, test_fp = collect_bags(test_manifest.entries, cfg)
        if test_fp != fingerprint:
            raise FingerprintMismatchError(fingerprint, test_fp)
        records = _predict_records(model, test_bags, test_manifest.entries,
                                   fold=None)
        report = metrics([r["predicted"] for r in records],
                         [r["truth"] for r in records])
    else:
        folds = stratified_fold_indices(manifest.labels(), cfg.folds,
                                        cfg.seed)
        fold_reports = []
        records = []
        for fold_num, test_idx in enumerate(folds):
            test_set = set(test_idx.tolist())
            train_bags = [b for i, b in enumerate(bags) if i not in test_set]
            model, _ = train(train_bags, cfg.train,
                             feature_fingerprint=fingerprint)
            fold_bags = [bags[i] for i in test_idx]
            fold_entries = [manifest.entries[i] for i in test_idx]
            fold_records = _predict_records(model, fold_bags, fold_entries,
                                            fold=fold_num)
            records.extend(fold_records)
            fold_reports.append(
                metrics([r["predicted"] for r in fold_records],
                        [r["truth"] for r in fold_records]))
        report = pooled_report(fold_reports)
    if cfg.overlay_dir:
        _write_mimn_overlays(records, cfg)
    return report, _strip_private(records)


def _run_detector(manifest: DatasetManifest, cfg: ExperimentConfig):
    for entry in manifest.entries:
        if entry.is_bagfile:
            raise DataError(
                f"entry {entry.entry_id!r}: detector baselines need images, "
                f"not bag files")
    palette = None
    if cfg.method == "palette":
        if cfg.palette_path is None:
            raise ConfigError("palette method requires a palette file")
        palette = load_palette(cfg.palette_path)

    overlay_dir = Path(cfg.overlay_dir) if cfg.overlay_dir else None
    if overlay_dir:
        overlay_dir.mkdir(parents=True, exist_ok=True)

    def detect(entry: ManifestEntry):
        img = load_image(entry.path)
        mask = lesion_mask(img)
        if cfg.method == "celebi":
            det = celebi_detect(img, mask)
        else:
            regions = meanshift_segment(img, cfg.meanshift)
            det = palette_detect(img, regions, palette)
        label = propagate_labels(det, mask, cfg.min_fraction)
        if overlay_dir:
            overlay_png(img, det.mask, overlay_dir / f"{entry.entry_id}.png")
        return {
            "id": entry.entry_id,
            "fold": None,
            "truth": entry.label,
            "predicted": label,
            "positive_pixels": det.positive_pixel_count,
            "abstained": det.abstained,
        }

    records = _map_entries(manifest.entries, detect, cfg.threads)
    report = metrics([r["predicted"] for r in records],
                     [r["truth"] for r in records])
    return report, records


def run_experiment(manifest: DatasetManifest, cfg: ExperimentConfig,
                   test_manifest: Optional[DatasetManifest] = None
                   ) -> Tuple[EvalReport, List[dict]]:
    """Evaluate one method on a manifest; see module docstring."""
    if cfg.method == "mimn":
        return _run_mimn(manifest, cfg, test_manifest)
    return _run_detector(test_manifest or manifest, cfg)
