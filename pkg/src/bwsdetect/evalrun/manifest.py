"""Dataset manifests: CSV rows of `id,path_or_bagfile,label`."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

from ..errors import DataError
from ..mil.types import check_bag_label

BAG_SUFFIXES = {".json"}
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass
class ManifestEntry:
    entry_id: str
    path: str
    label: int

    @property
    def is_bagfile(self) -> bool:
        return Path(self.path).suffix.lower() in BAG_SUFFIXES


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise DataError("manifest is empty")
        ids = [e.entry_id for e in self.entries]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate manifest ids: {dupes}")

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> List[int]:
        return [e.label for e in self.entries]


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    entries = []
    with open(path, newline="") as fh:
        for row_num, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if row_num == 1 and row[0].strip().lower() == "id":
                continue  # optional header
            if len(row) != 3:
                raise DataError(
                    f"{path}:{row_num}: expected 3 columns id,path,label, "
                    f"got {len(row)}")
            entry_id, p, label_text = (c.strip() for c in row)
            try:
                label = check_bag_label(int(label_text))
            except ValueError:
                raise DataError(
                    f"{path}:{row_num}: label must be +1 or -1, "
                    f"got {label_text!r}")
            rel = Path(p)
            if not rel.is_absolute():
                rel = path.parent / rel
            entries.append(ManifestEntry(entry_id, str(rel), label))
    return DatasetManifest(entries)


def save_manifest(manifest: DatasetManifest, path: Union[str, Path],
                  relative_to: Union[str, Path, None] = None) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "label"])
        for e in manifest.entries:
            p = e.path
            if relative_to is not None:
                try:
                    p = str(Path(p).relative_to(relative_to))
                except ValueError:
                    pass
            writer.writerow([e.entry_id, p, f"{e.label:+d}"])
