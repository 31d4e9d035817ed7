"""Mean-shift segmentation: joint spatial-range filtering plus clustering.

Each pixel mode-seeks in (y, x, L, a, b): the window is the set of pixels
within the spatial bandwidth of the current position whose Lab values lie
within the range bandwidth of the current color; the position moves to the
window mean until the shift falls below 0.01 or 100 iterations pass.
Adjacent pixels whose converged modes are close (spatial distance < h_s,
range distance < h_r) join one region; regions below the minimum area are
absorbed into their most similar neighbor. Runs on Lab rather than LUV so
the range bandwidth matches the color histogram space used downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..colorspace import srgb_to_lab_image
from .regions import RegionMap, regions_from_label_plane

_MAX_ITER = 100
_SHIFT_EPS = 0.01


@dataclass
class MeanShiftParams:
    spatial_bandwidth: float = 7.0
    range_bandwidth: float = 6.5
    min_region_area: float = 0.01  # fraction of the image

    def __post_init__(self):
        if not (self.spatial_bandwidth > 0 and self.range_bandwidth > 0
                and self.min_region_area > 0):
            raise ValueError("mean-shift parameters must be positive")


@njit(cache=True)
def _filter_modes(lab, h_s, h_r, max_iter, eps):  # pragma: no cover - numba
    h, w = lab.shape[:2]
    modes = np.empty((h, w, 5), dtype=np.float64)
    reach = int(np.ceil(h_s + 0.5))
    hs2 = h_s * h_s
    hr2 = h_r * h_r
    eps2 = eps * eps
    for i in range(h):
        for j in range(w):
            y = float(i)
            x = float(j)
            lv = lab[i, j, 0]
            av = lab[i, j, 1]
            bv = lab[i, j, 2]
            for _ in range(max_iter):
                cy = int(round(y))
                cx = int(round(x))
                y0 = max(cy - reach, 0)
                y1 = min(cy + reach, h - 1)
                x0 = max(cx - reach, 0)
                x1 = min(cx + reach, w - 1)
                sy = 0.0
                sx = 0.0
                sl = 0.0
                sa = 0.0
                sb = 0.0
                cnt = 0
                for ny in range(y0, y1 + 1):
                    dy = ny - y
                    dy2 = dy * dy
                    if dy2 > hs2:
                        continue
                    for nx in range(x0, x1 + 1):
                        dx = nx - x
                        if dy2 + dx * dx > hs2:
                            continue
                        dl = lab[ny, nx, 0] - lv
                        da = lab[ny, nx, 1] - av
                        db = lab[ny, nx, 2] - bv
                        if dl * dl + da * da + db * db > hr2:
                            continue
                        sy += ny
                        sx += nx
                        sl += lab[ny, nx, 0]
                        sa += lab[ny, nx, 1]
                        sb += lab[ny, nx, 2]
                        cnt += 1
                if cnt == 0:
                    break
                my = sy / cnt
                mx = sx / cnt
                ml = sl / cnt
                ma = sa / cnt
                mb = sb / cnt
                shift = ((my - y) ** 2 + (mx - x) ** 2 + (ml - lv) ** 2
                         + (ma - av) ** 2 + (mb - bv) ** 2)
                y, x, lv, av, bv = my, mx, ml, ma, mb
                if shift < eps2:
                    break
            modes[i, j, 0] = y
            modes[i, j, 1] = x
            modes[i, j, 2] = lv
            modes[i, j, 3] = av
            modes[i, j, 4] = bv
    return modes


@njit(cache=True)
def _cluster_modes(modes, h_s, h_r):  # pragma: no cover - numba
    """Union 4-adjacent pixels whose modes are close; roots are min indices."""
    h, w = modes.shape[:2]
    n = h * w
    parent = np.arange(n, dtype=np.int64)
    hs2 = h_s * h_s
    hr2 = h_r * h_r
    for i in range(h):
        for j in range(w):
            p = i * w + j
            for t in range(2):
                ni = i + 1 if t == 0 else i
                nj = j if t == 0 else j + 1
                if ni >= h or nj >= w:
                    continue
                dy = modes[i, j, 0] - modes[ni, nj, 0]
                dx = modes[i, j, 1] - modes[ni, nj, 1]
                if dy * dy + dx * dx >= hs2:
                    continue
                dl = modes[i, j, 2] - modes[ni, nj, 2]
                da = modes[i, j, 3] - modes[ni, nj, 3]
                db = modes[i, j, 4] - modes[ni, nj, 4]
                if dl * dl + da * da + db * db >= hr2:
                    continue
                a = p
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                q = ni * w + nj
                b = q
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a < b:
                    parent[b] = a
                elif b < a:
                    parent[a] = b
    labels = np.empty(n, dtype=np.int64)
    for p in range(n):
        a = p
        while parent[a] != a:
            a = parent[a]
        labels[p] = a
    return labels.reshape(h, w)


def _adjacency(plane: np.ndarray) -> dict:
    adj: dict = {}
    for a, b in ((plane[:-1, :], plane[1:, :]), (plane[:, :-1], plane[:, 1:])):
        diff = a != b
        pairs = np.unique(np.stack([a[diff], b[diff]], axis=1), axis=0)
        for u, v in pairs:
            adj.setdefault(int(u), set()).add(int(v))
            adj.setdefault(int(v), set()).add(int(u))
    return adj


def _merge_small_regions(plane: np.ndarray, lab_modes: np.ndarray,
                         min_area: float) -> np.ndarray:
    """Absorb regions below min_area into the closest-color neighbor."""
    ids = np.unique(plane)
    areas = {int(r): int(np.sum(plane == r)) for r in ids}
    sums = {int(r): lab_modes[plane == r].sum(axis=0) for r in ids}
    adj = _adjacency(plane)
    relabel = {int(r): int(r) for r in ids}

    def resolve(r):
        while relabel[r] != r:
            r = relabel[r]
        return r

    while len(areas) > 1:
        small = sorted(r for r, a in areas.items() if a < min_area)
        if not small:
            break
        victim = min(small, key=lambda r: (areas[r], r))
        mean_v = sums[victim] / areas[victim]
        best = None
        for nb in sorted(adj.get(victim, ())):
            mean_n = sums[nb] / areas[nb]
            dist = float(np.sum((mean_v - mean_n) ** 2))
            if best is None or dist < best[0] - 1e-12:
                best = (dist, nb)
        if best is None:
            break  # isolated region; keep it
        target = best[1]
        areas[target] += areas.pop(victim)
        sums[target] += sums.pop(victim)
        relabel[victim] = target
        neighbors = adj.pop(victim, set())
        for nb in neighbors:
            adj[nb].discard(victim)
            if nb != target:
                adj[nb].add(target)
                adj.setdefault(target, set()).add(nb)
        adj.get(target, set()).discard(target)

    flat = np.vectorize(resolve)(plane)
    # renumber to 1..K in raster order of first appearance
    _, first_index = np.unique(flat, return_index=True)
    order = flat.ravel()[np.sort(first_index)]
    mapping = {int(old): new for new, old in enumerate(order, start=1)}
    out = np.vectorize(mapping.__getitem__)(flat)
    return out.astype(np.int32)


def meanshift_segment(img: np.ndarray,
                      params: MeanShiftParams | None = None) -> RegionMap:
    """Segment an sRGB image into homogeneous regions; deterministic."""
    params = params or MeanShiftParams()
    lab = srgb_to_lab_image(img)
    modes = _filter_modes(lab, params.spatial_bandwidth,
                          params.range_bandwidth, _MAX_ITER, _SHIFT_EPS)
    raw = _cluster_modes(modes, params.spatial_bandwidth,
                         params.range_bandwidth)
    lab_modes = modes[:, :, 2:]
    h, w = raw.shape
    min_area = params.min_region_area * h * w
    plane = _merge_small_regions(raw, lab_modes, min_area)
    return regions_from_label_plane(plane, mean_lab=lab_modes)
