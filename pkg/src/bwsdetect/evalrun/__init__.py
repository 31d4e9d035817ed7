"""Datasets, cross-validation, metrics, and experiment orchestration."""

from .experiment import ExperimentConfig, collect_bags, run_experiment
from .folds import kfold_split, stratified_fold_indices
from .manifest import DatasetManifest, ManifestEntry, load_manifest, save_manifest
from .metrics import EvalReport, metrics, pooled_report, report_from_counts
from .postprocess import propagate_labels
from .report import format_text_table, report_to_dict, write_report
from .synth import (
    SYNTH_VECTOR_FINGERPRINT,
    SynthBag,
    SynthConfig,
    SynthImage,
    generate_images,
    generate_vector_bags,
    synth_generate,
    write_synth_dataset,
)

__all__ = [
    "DatasetManifest", "ManifestEntry", "load_manifest", "save_manifest",
    "SynthConfig", "SynthBag", "SynthImage", "synth_generate",
    "generate_vector_bags", "generate_images", "write_synth_dataset",
    "SYNTH_VECTOR_FINGERPRINT",
    "EvalReport", "metrics", "pooled_report", "report_from_counts",
    "kfold_split", "stratified_fold_indices", "propagate_labels",
    "ExperimentConfig", "run_experiment", "collect_bags",
    "write_report", "report_to_dict", "format_text_table",
]
