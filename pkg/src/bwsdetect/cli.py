"""Command-line surface: extract | train | predict | baseline | eval | synth.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import CliConfig, load_config
from .errors import (
    BwsError,
    ConfigError,
    DataError,
    DimensionMismatchError,
    FingerprintMismatchError,
    NumericalError,
)
from .evalrun.experiment import (
    ExperimentConfig,
    augment_for_model,
    collect_bags,
    positive_region_mask,
)
from .evalrun.manifest import load_manifest
from .evalrun.metrics import EvalReport
from .evalrun.report import format_text_table, report_to_dict, write_report
from .evalrun.synth import SynthConfig, write_synth_dataset
from .features.bagfile import load_bag, save_bag
from .features.extract import bag_and_regions_from_image, bag_from_image
from .imaging.io import load_image, overlay_png, save_label_png, save_mask_png
from .mil.inference import predict_bag
from .mil.model_io import load_model, save_model
from .mil.training import train
from .mil.types import standard_mil

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2 for
    data problems, so remap usage errors to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _experiment_config(cfg: CliConfig, method: str, palette=None,
                       overlay_dir=None) -> ExperimentConfig:
    return ExperimentConfig(
        method=method, folds=cfg.folds, seed=cfg.seed,
        segmentation=cfg.segmentation, grid_cell=cfg.grid_cell,
        min_fraction=cfg.min_fraction, feature=cfg.feature,
        meanshift=cfg.meanshift, train=cfg.train,
        palette_path=palette, threads=cfg.threads, overlay_dir=overlay_dir)


def _load_cli_config(args) -> CliConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "threads": getattr(args, "threads", None),
        "folds": getattr(args, "folds", None),
        "segmentation": getattr(args, "segmentation", None),
    }
    return load_config(getattr(args, "config", None), overrides)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        mode=args.mode, n_pos=args.n_pos, n_neg=args.n_neg,
        m_range=(args.m_min, args.m_max), dim=args.dim,
        mu_pos=tuple([args.cluster_mean] + [0.0] * (args.dim - 1)),
        mu_neg=tuple([-args.cluster_mean] + [0.0] * (args.dim - 1)),
        sigma=args.sigma, image_size=args.image_size, seed=args.seed or 0)
    manifest = write_synth_dataset(cfg, args.out_dir)
    print(f"wrote {len(manifest)} {cfg.mode} entries to {args.out_dir} "
          f"(manifest.csv included)")
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _load_cli_config(args)
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    debug_dir = Path(args.debug_dir) if args.debug_dir else None
    if debug_dir:
        debug_dir.mkdir(parents=True, exist_ok=True)
    fingerprint = cfg.feature.fingerprint()

    def process(entry):
        if entry.is_bagfile:
            return entry, None, "already a bag file"
        try:
            img = load_image(entry.path)
            bag, region_map, mask = bag_and_regions_from_image(
                img, label=entry.label, cfg=cfg.feature,
                segmentation=cfg.segmentation, ms_params=cfg.meanshift,
                grid_cell=cfg.grid_cell, bag_id=entry.entry_id)
        except BwsError as exc:
            return entry, None, str(exc)
        if debug_dir:
            save_label_png(region_map.region_id,
                           debug_dir / f"{entry.entry_id}_regions.png")
            save_mask_png(mask.inside,
                          debug_dir / f"{entry.entry_id}_mask.png")
        return entry, bag, None

    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            processed = list(pool.map(process, manifest.entries))
    else:
        processed = [process(e) for e in manifest.entries]

    results = []
    failures = 0
    rows = []
    for entry, bag, error in processed:
        if error is not None:
            results.append({"id": entry.entry_id, "error": error})
            failures += 1
            print(f"FAIL {entry.entry_id}: {error}", file=sys.stderr)
            continue
        bag_path = out_dir / f"{entry.entry_id}.json"
        save_bag(bag, fingerprint, bag_path)
        results.append({"id": entry.entry_id, "m": bag.m,
                        "bagfile": bag_path.name})
        rows.append((entry.entry_id, bag_path.name, entry.label))
        print(f"ok   {entry.entry_id}: m={bag.m}")
    log = {"config": cfg.echo(), "fingerprint": fingerprint,
           "results": results, "failures": failures}
    (out_dir / "extraction_log.json").write_text(
        json.dumps(log, indent=2, sort_keys=True) + "\n")
    with open(out_dir / "bags_manifest.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "label"])
        for row in rows:
            writer.writerow([row[0], row[1], f"{row[2]:+d}"])
    print(f"{len(rows)} bag files written to {out_dir}; "
          f"{failures} failure(s)")
    return EXIT_DATA if failures else EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cli_config(args)
    exp = _experiment_config(cfg, "mimn")
    if args.manifest:
        manifest = load_manifest(args.manifest)
        entries = manifest.entries
    else:
        entries = []
        from .evalrun.manifest import ManifestEntry
        for path in args.bags:
            bag, _ = load_bag(path)
            if bag.label is None:
                raise DataError(f"bag file {path} carries no label")
            entries.append(ManifestEntry(bag.bag_id or Path(path).stem,
                                         str(path), bag.label))
    bags, fingerprint = collect_bags(entries, exp)
    weights, trace = train(bags, cfg.train, feature_fingerprint=fingerprint)
    save_model(weights, args.model_out)
    trace_path = Path(args.trace_out) if args.trace_out \
        else Path(args.model_out).with_suffix(".trace.csv")
    with open(trace_path, "w", newline="") as fh:
        fh.write(f"# config: {json.dumps(cfg.echo(), sort_keys=True)}\n")
        writer = csv.writer(fh)
        writer.writerow(["outer_iter", "objective"])
        for i, val in enumerate(trace.objectives):
            writer.writerow([i, f"{val:.17g}"])
    print(f"trained on {len(bags)} bags "
          f"(objective {trace.objectives[0]:.4f} -> "
          f"{trace.objectives[-1]:.4f}, "
          f"{trace.outer_iters} outer iterations, "
          f"converged={trace.converged})")
    print(f"model written to {args.model_out}, trace to {trace_path}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _load_cli_config(args)
    model = load_model(args.model)
    input_path = Path(args.input)
    region_source_img = None
    if input_path.suffix.lower() == ".json":
        bag, fingerprint = load_bag(input_path)
    else:
        img = load_image(input_path)
        bag = bag_from_image(img, cfg=cfg.feature,
                             segmentation=cfg.segmentation,
                             ms_params=cfg.meanshift,
                             grid_cell=cfg.grid_cell,
                             bag_id=input_path.stem)
        fingerprint = cfg.feature.fingerprint()
        region_source_img = img
    if fingerprint != model.feature_fingerprint:
        raise FingerprintMismatchError(model.feature_fingerprint, fingerprint)
    if bag.dim != model.feature_dim:
        raise DimensionMismatchError(
            f"model expects D={model.feature_dim}, bag has D={bag.dim}")
    bag = augment_for_model(bag, model)
    label, labeling = predict_bag(model, standard_mil(), bag)
    region_ids = (bag.region_ids.tolist() if bag.region_ids is not None
                  else list(range(bag.m)))
    instances = [{"region_id": rid, "label": int(y)}
                 for rid, y in zip(region_ids, labeling.labels)]
    if args.format == "json":
        print(json.dumps({"bag_id": bag.bag_id, "label": int(label),
                          "instances": instances, "config": cfg.echo()},
                         indent=2, sort_keys=True))
    else:
        print(f"{bag.bag_id}: {label:+d}")
        for inst in instances:
            print(f"  region {inst['region_id']}: {inst['label']:+d}")
        print(f"# feature fingerprint {fingerprint}")
    if args.overlay:
        if region_source_img is None:
            raise ConfigError("--overlay needs an image input, not a bag file")
        positive = [inst["region_id"] for inst in instances
                    if inst["label"] == 1]
        exp = _experiment_config(cfg, "mimn")
        mask = positive_region_mask(region_source_img, positive, exp)
        overlay_png(region_source_img, mask, args.overlay)
        print(f"overlay written to {args.overlay}")
    return EXIT_OK


def _emit_report(report: EvalReport, records, cfg: CliConfig, method: str,
                 out_dir, fmt: str, extra_config=None) -> None:
    echo = cfg.echo()
    if extra_config:
        echo.update(extra_config)
    if out_dir:
        written = write_report(report, out_dir, echo, method=method,
                               records=records)
        print(f"report written to {out_dir} "
              f"({', '.join(sorted(written))})")
    if fmt == "json":
        print(json.dumps({"method": method, "config": echo,
                          "report": report_to_dict(report)},
                         indent=2, sort_keys=True))
    else:
        print(format_text_table(report, method), end="")


def cmd_baseline(args) -> int:
    cfg = _load_cli_config(args)
    exp = _experiment_config(cfg, args.method, palette=args.palette,
                             overlay_dir=args.overlay_dir)
    from .evalrun.experiment import run_experiment
    manifest = load_manifest(args.manifest)
    report, records = run_experiment(manifest, exp)
    _emit_report(report, records, cfg, args.method, args.out_dir,
                 args.format,
                 extra_config={"palette": args.palette} if args.palette
                 else None)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cli_config(args)
    exp = _experiment_config(cfg, args.method, palette=args.palette,
                             overlay_dir=args.overlay_dir)
    from .evalrun.experiment import run_experiment
    manifest = load_manifest(args.manifest)
    test_manifest = load_manifest(args.test_manifest) \
        if args.test_manifest else None
    report, records = run_experiment(manifest, exp,
                                     test_manifest=test_manifest)
    _emit_report(report, records, cfg, args.method, args.out_dir,
                 args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="TOML or JSON configuration file")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--threads", type=int, help="worker threads")
    sub.add_argument("--format", choices=("json", "text"), default="text",
                     help="stdout format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bwsdetect",
                     description="Weakly supervised detection of "
                                 "blue-whitish structures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate synthetic data")
    p.add_argument("--mode", choices=("vector_bags", "images"),
                   default="vector_bags")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-pos", type=int, default=50)
    p.add_argument("--n-neg", type=int, default=50)
    p.add_argument("--m-min", type=int, default=3)
    p.add_argument("--m-max", type=int, default=8)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--cluster-mean", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--image-size", type=int, default=128)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="images -> bag files")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--segmentation", choices=("meanshift", "grid"))
    p.add_argument("--debug-dir", help="also write region-id (16-bit) and "
                                       "lesion-mask PNGs here")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a model on labeled bags")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest")
    group.add_argument("--bags", nargs="+", help="bag files with labels")
    p.add_argument("--model-out", required=True)
    p.add_argument("--trace-out", help="objective trace CSV "
                                       "(default: alongside the model)")
    p.add_argument("--segmentation", choices=("meanshift", "grid"))
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label one image or bag file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="image or bag file")
    p.add_argument("--overlay", help="write a PNG tinting positive regions")
    p.add_argument("--segmentation", choices=("meanshift", "grid"))
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("baseline", help="run a detector baseline")
    p.add_argument("--method", choices=("celebi", "palette"), required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", help="report directory")
    p.add_argument("--palette", help="palette JSON (palette method)")
    p.add_argument("--overlay-dir", help="write detection overlays here")
    _add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="cross-validated or cross-dataset run")
    p.add_argument("--method", choices=("mimn", "celebi", "palette"),
                   default="mimn")
    p.add_argument("--manifest", required=True,
                   help="dataset (or training set with --test-manifest)")
    p.add_argument("--test-manifest", help="evaluate on this second set")
    p.add_argument("--folds", type=int, help="override config fold count")
    p.add_argument("--out-dir", help="report directory")
    p.add_argument("--palette", help="palette JSON (palette method)")
    p.add_argument("--overlay-dir", help="write overlays here")
    p.add_argument("--segmentation", choices=("meanshift", "grid"))
    _add_common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BwsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
