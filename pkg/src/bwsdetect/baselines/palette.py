"""Color-palette matcher: regions are flagged when their mean Lab color
sits within a threshold distance of a reference patch known to describe
the feature.

The palette is either loaded from a file or rebuilt from annotated pixels:
every annotated pixel maps to its nearest patch in a Munsell lookup table
(Euclidean Lab distance, exhaustive scan), the patches covering 98% of the
cumulative feature-pixel frequency are kept, and patches that also describe
non-feature pixels are excluded.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..colorspace import srgb_to_lab_image
from ..errors import ConfigError, DataError
from ..imaging.regions import RegionMap
from .celebi import DetectionMask

PALETTE_FORMAT_VERSION = 1
DEFAULT_MATCH_THRESHOLD = 10.0
DEFAULT_COVERAGE = 0.98


@dataclass
class PalettePatch:
    lab: np.ndarray
    patch_id: str
    is_bws: bool

    def __post_init__(self):
        self.lab = np.asarray(self.lab, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(self.lab)):
            raise ValueError(f"patch {self.patch_id}: non-finite Lab")


@dataclass
class MunsellPalette:
    patches: List[PalettePatch]
    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    source: str = "loaded"  # or "built"

    def __post_init__(self):
        if not any(p.is_bws for p in self.patches):
            raise DataError("palette has no positive patch")
        if not self.match_threshold > 0:
            raise ValueError("match threshold must be positive")

    @property
    def lab_array(self) -> np.ndarray:
        return np.stack([p.lab for p in self.patches])


def nearest_patch(patch_labs: np.ndarray, query: np.ndarray) -> int:
    """Index of the closest patch (Euclidean Lab, first index on ties)."""
    d2 = np.sum((patch_labs - query[None, :]) ** 2, axis=1)
    return int(np.argmin(d2))


def load_munsell_table(path: Union[str, Path]
                       ) -> Tuple[np.ndarray, List[str]]:
    """Lookup table of (Lab coordinates, patch ids) from CSV or JSON."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Munsell lookup table not found: {path}")
    labs: List[Sequence[float]] = []
    ids: List[str] = []
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text())
        for patch in doc["patches"]:
            ids.append(str(patch["id"]))
            labs.append((float(patch["L"]), float(patch["a"]),
                         float(patch["b"])))
    else:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for row_num, row in enumerate(reader, start=1):
                if not row or row[0].startswith("#"):
                    continue
                if row_num == 1 and row[0].strip().lower() == "id":
                    continue
                if len(row) != 4:
                    raise DataError(f"{path}:{row_num}: expected id,L,a,b")
                ids.append(row[0].strip())
                labs.append(tuple(float(v) for v in row[1:]))
    if not labs:
        raise DataError(f"Munsell lookup table {path} is empty")
    return np.asarray(labs, dtype=np.float64), ids


def palette_build(annotated_labs: np.ndarray, is_bws: np.ndarray,
                  table_labs: np.ndarray, table_ids: Sequence[str],
                  coverage: float = DEFAULT_COVERAGE,
                  match_threshold: float = DEFAULT_MATCH_THRESHOLD
                  ) -> MunsellPalette:
    """Distill annotated pixels into an exclusive feature palette."""
    annotated_labs = np.asarray(annotated_labs, dtype=np.float64)
    is_bws = np.asarray(is_bws, dtype=bool)
    if annotated_labs.ndim != 2 or annotated_labs.shape[1] != 3:
        raise ValueError("annotated pixels must be an (n, 3) Lab array")
    if len(is_bws) != len(annotated_labs):
        raise ValueError("annotation flags must match the pixel count")
    if not is_bws.any():
        raise DataError("no positive-annotated pixel supplied")

    # nearest table patch per pixel, exhaustive scan in one shot
    d2 = ((annotated_labs[:, None, :] - table_labs[None, :, :]) ** 2).sum(-1)
    assignment = np.argmin(d2, axis=1)

    pos_counts = np.bincount(assignment[is_bws], minlength=len(table_labs))
    overlap = set(np.unique(assignment[~is_bws]).tolist())

    order = np.argsort(-pos_counts, kind="stable")
    total = pos_counts.sum()
    kept: List[int] = []
    covered = 0
    for idx in order:
        if pos_counts[idx] == 0:
            break
        kept.append(int(idx))
        covered += int(pos_counts[idx])
        if covered >= coverage * total:
            break
    kept = [idx for idx in kept if idx not in overlap]
    if not kept:
        raise DataError("every candidate patch also describes negative "
                        "pixels; palette would be empty")
    patches = [PalettePatch(table_labs[idx], table_ids[idx], True)
               for idx in sorted(kept)]
    return MunsellPalette(patches, match_threshold=match_threshold,
                          source="built")


def palette_detect(img: np.ndarray, regions: RegionMap,
                   palette: MunsellPalette) -> DetectionMask:
    """Mark every region whose mean Lab matches a positive patch."""
    if regions.shape != img.shape[:2]:
        raise ValueError(f"region map {regions.shape} does not match image "
                         f"{img.shape[:2]}")
    lab = srgb_to_lab_image(img)
    patch_labs = palette.lab_array
    out = np.zeros(img.shape[:2], dtype=bool)
    threshold2 = palette.match_threshold ** 2
    for region in regions.regions:
        ys, xs = region.pixels
        mean_lab = lab[ys, xs].mean(axis=0)
        idx = nearest_patch(patch_labs, mean_lab)
        d2 = float(np.sum((patch_labs[idx] - mean_lab) ** 2))
        if d2 <= threshold2 and palette.patches[idx].is_bws:
            out[ys, xs] = True
    return DetectionMask(out)


def save_palette(palette: MunsellPalette, path: Union[str, Path]) -> None:
    doc = {
        "version": PALETTE_FORMAT_VERSION,
        "match_threshold": palette.match_threshold,
        "patches": [
            {"L": float(p.lab[0]), "a": float(p.lab[1]), "b": float(p.lab[2]),
             "id": p.patch_id, "is_bws": p.is_bws}
            for p in palette.patches
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_palette(path: Union[str, Path]) -> MunsellPalette:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"palette file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"palette file {path} is not valid JSON: {exc}")
    if doc.get("version") != PALETTE_FORMAT_VERSION:
        raise ConfigError(
            f"palette file {path}: unsupported version {doc.get('version')!r}")
    try:
        patches = [PalettePatch(np.array([p["L"], p["a"], p["b"]]),
                                str(p["id"]), bool(p["is_bws"]))
                   for p in doc["patches"]]
        return MunsellPalette(patches,
                              match_threshold=float(doc["match_threshold"]),
                              source="loaded")
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"palette file {path} is malformed: {exc}")
