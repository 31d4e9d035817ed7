"""Synthetic datasets for desk-scale verification.

Two generators: vector bags drawn from two Gaussian clusters under the
standard MIL story (every positive bag gets at least one positive-cluster
instance, negative bags only negative-cluster ones), and skin-like images
(dark lesion disk on a light background, positives carrying a blue-gray
blob inside the lesion). Both are deterministic under the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..mil.types import NEGATIVE, POSITIVE, Bag


@dataclass
class SynthConfig:
    mode: str = "vector_bags"  # or "images"
    n_pos: int = 50
    n_neg: int = 50
    m_range: Tuple[int, int] = (3, 8)
    dim: int = 2
    mu_pos: Tuple[float, ...] = (2.0, 0.0)
    mu_neg: Tuple[float, ...] = (-2.0, 0.0)
    sigma: float = 0.3
    image_size: int = 128
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("vector_bags", "images"):
            raise ValueError(f"unknown synth mode {self.mode!r}")
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("need at least one bag per class")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        lo, hi = self.m_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad m_range {self.m_range}")
        if len(self.mu_pos) != self.dim or len(self.mu_neg) != self.dim:
            raise ValueError("cluster means must have length dim")


@dataclass
class SynthBag:
    bag: Bag
    instance_truth: np.ndarray  # +1 for positive-cluster instances


@dataclass
class SynthImage:
    image_id: str
    image: np.ndarray  # (h, w, 3) uint8
    label: int
    lesion_center: Tuple[int, int] = (0, 0)
    lesion_radius: int = 0
    blob_mask: Optional[np.ndarray] = None  # the inner blob (both classes)


def generate_vector_bags(cfg: SynthConfig) -> List[SynthBag]:
    rng = np.random.default_rng(cfg.seed)
    mu_pos = np.asarray(cfg.mu_pos, dtype=float)
    mu_neg = np.asarray(cfg.mu_neg, dtype=float)
    out: List[SynthBag] = []
    lo, hi = cfg.m_range
    labels = [POSITIVE] * cfg.n_pos + [NEGATIVE] * cfg.n_neg
    for idx, label in enumerate(labels):
        m = int(rng.integers(lo, hi + 1))
        if label == POSITIVE:
            n_pos_inst = int(rng.integers(1, m + 1))
        else:
            n_pos_inst = 0
        truth = np.full(m, NEGATIVE, dtype=np.int64)
        truth[:n_pos_inst] = POSITIVE
        rng.shuffle(truth)
        feats = np.where(
            (truth == POSITIVE)[:, None],
            mu_pos[None, :], mu_neg[None, :],
        ) + rng.normal(0.0, cfg.sigma, size=(m, cfg.dim))
        bag = Bag(feats, label=label, bag_id=f"synth-{idx:04d}")
        out.append(SynthBag(bag=bag, instance_truth=truth))
    return out


# Colors chosen so that the pixel-threshold baseline fires on the positive
# blob only: healthy background satisfies R>90, R>B, R>G; the blue-gray blob
# satisfies nB = B/(R+G+B) >= 0.3 and R - mean_healthy_red inside
# [-194, -51); the tan distractor blob in negative images stays below the
# nB threshold. Both classes carry an inner blob, and the distractor shares
# the blue blob's luma, so gray-plane texture is statistically identical
# across classes and the blob's color histogram is the only discriminative
# instance signal (forcing correct localization, not just bag labels).
_BACKGROUND = np.array([200, 172, 160])
_LESION = np.array([120, 94, 82])
_BLOB_POSITIVE = np.array([90, 110, 150])
_BLOB_DISTRACTOR = np.array([150, 97, 65])


def _disk(h: int, w: int, cy: float, cx: float, r: float) -> np.ndarray:
    yy, xx = np.ogrid[:h, :w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r


def generate_images(cfg: SynthConfig) -> List[SynthImage]:
    rng = np.random.default_rng(cfg.seed)
    s = cfg.image_size
    out: List[SynthImage] = []
    labels = [POSITIVE] * cfg.n_pos + [NEGATIVE] * cfg.n_neg
    for idx, label in enumerate(labels):
        def jitter():
            return rng.integers(-3, 4, size=3)

        bg = np.clip(_BACKGROUND + jitter(), 0, 255).astype(np.uint8)
        # the lesion body color is held fixed: a flat region quantizes into
        # a single histogram bin, so per-image color jitter would hand the
        # learner a noise bit that separates tiny training sets by chance
        lesion_col = _LESION.astype(np.uint8)
        img = np.tile(bg, (s, s, 1)).astype(np.uint8)

        r = int(s * (0.28 + 0.06 * rng.random()))
        cy = s / 2 + rng.integers(-s // 16, s // 16 + 1)
        cx = s / 2 + rng.integers(-s // 16, s // 16 + 1)
        lesion = _disk(s, s, cy, cx, r)
        img[lesion] = lesion_col

        base = _BLOB_POSITIVE if label == POSITIVE else _BLOB_DISTRACTOR
        blob_col = np.clip(base + jitter(), 0, 255).astype(np.uint8)
        # blob area ~15% of the lesion, placed fully inside it
        br = max(3, int(r * np.sqrt(0.15)))
        max_off = max(r - br - 1, 0)
        ang = rng.random() * 2 * np.pi
        off = rng.random() * max_off
        by, bx = cy + off * np.sin(ang), cx + off * np.cos(ang)
        blob_mask = _disk(s, s, by, bx, br)
        img[blob_mask] = blob_col

        if cfg.noise_sigma > 0:
            noise = rng.normal(0.0, cfg.noise_sigma, size=img.shape)
            img = np.clip(img.astype(float) + noise, 0, 255).astype(np.uint8)

        out.append(SynthImage(
            image_id=f"synth-img-{idx:04d}", image=img, label=label,
            lesion_center=(int(cy), int(cx)), lesion_radius=r,
            blob_mask=blob_mask))
    return out


def synth_generate(cfg: SynthConfig):
    """Dispatch on mode; see generate_vector_bags / generate_images."""
    if cfg.mode == "vector_bags":
        return generate_vector_bags(cfg)
    return generate_images(cfg)


SYNTH_VECTOR_FINGERPRINT = "synthetic-vector-bags"


def write_synth_dataset(cfg: SynthConfig, out_dir) -> "DatasetManifest":
    """Materialize a synthetic dataset (bag files or PNGs) plus manifest.csv."""
    from pathlib import Path

    from ..features.bagfile import save_bag
    from ..imaging.io import save_image
    from .manifest import DatasetManifest, ManifestEntry, save_manifest

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    if cfg.mode == "vector_bags":
        for sb in generate_vector_bags(cfg):
            path = out_dir / f"{sb.bag.bag_id}.json"
            save_bag(sb.bag, SYNTH_VECTOR_FINGERPRINT, path)
            entries.append(ManifestEntry(sb.bag.bag_id, str(path),
                                         sb.bag.label))
    else:
        for im in generate_images(cfg):
            path = out_dir / f"{im.image_id}.png"
            save_image(im.image, path)
            entries.append(ManifestEntry(im.image_id, str(path), im.label))
    manifest = DatasetManifest(entries)
    save_manifest(manifest, out_dir / "manifest.csv", relative_to=out_dir)
    return manifest
