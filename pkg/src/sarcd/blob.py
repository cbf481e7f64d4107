"""Blob extraction and filtering on enhanced frames (Phase 2).

A frame is histogram-equalized, masked to an intensity band, labeled into
connected components (two-pass union-find over row runs), and each region
is reduced to area / centroid / crack perimeter / Heywood circularity /
Chebyshev radius before threshold filtering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imgproc import check_frame, histogram_equalize


@dataclass(frozen=True)
class Blob:
    area: int
    centroid: tuple[float, float]       # (x, y)
    radius_rn: float
    perimeter: int
    circularity: float
    label: int


@dataclass(frozen=True)
class BlobFilterConfig:
    min_area: float = 9.0
    max_area: float = math.pi * 64.0    # circle of radius d/2 at d=16
    intensity_lo: float = 0.0
    intensity_hi: float = 125.0
    max_circularity: float = 1.5
    connectivity: int = 8

    def __post_init__(self):
        if not (0.0 <= self.intensity_lo < self.intensity_hi <= 255.0):
            raise ValueError(
                f"intensity band must satisfy 0 <= lo < hi <= 255, got "
                f"[{self.intensity_lo}, {self.intensity_hi}]"
            )
        if not (0 < self.min_area < self.max_area):
            raise ValueError(
                f"area bounds must satisfy 0 < min < max, got "
                f"[{self.min_area}, {self.max_area}]"
            )
        if self.max_circularity <= 0:
            raise ValueError("max_circularity must be positive")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


def max_area_for_spacing(spacing_d: float) -> float:
    """Area of the circle whose radius is half the grid spacing."""
    return math.pi * (spacing_d / 2.0) ** 2


def intensity_mask(frame: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Binary mask of pixels inside the inclusive intensity band [lo, hi]."""
    frame = check_frame(frame)
    if lo >= hi:
        raise ValueError(f"intensity band requires lo < hi, got [{lo}, {hi}]")
    return ((frame >= lo) & (frame <= hi)).astype(np.uint8)


def _row_runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) runs of 1s in a binary row."""
    padded = np.concatenate([[0], row.astype(np.int8), [0]])
    diff = np.diff(padded)
    starts = np.nonzero(diff == 1)[0]
    ends = np.nonzero(diff == -1)[0]
    return list(zip(starts, ends))


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self):
        self.parent: list[int] = []

    def make(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller id as root so final labels follow raster order
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def connected_components(mask: np.ndarray, connectivity: int = 8) -> np.ndarray:
    """Label maximal connected 1-regions of a binary mask.

    Two-pass union-find over row runs; labels are dense from 1 and ordered
    by the raster position of each region's first pixel, background is 0.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    h, w = mask.shape
    uf = _UnionFind()
    # run id -> (row, start, end) in raster order of creation
    runs: list[tuple[int, int, int]] = []
    prev_runs: list[tuple[int, int, int]] = []      # (start, end, run id)
    reach = 0 if connectivity == 4 else 1           # diagonal reach of 8-conn
    for y in range(h):
        cur_runs: list[tuple[int, int, int]] = []
        pi = 0
        for start, end in _row_runs(mask[y]):
            rid = uf.make()
            runs.append((y, int(start), int(end)))
            cur_runs.append((int(start), int(end), rid))
            # merge with previous-row runs whose (possibly widened) span overlaps
            while pi < len(prev_runs) and prev_runs[pi][1] + reach <= start:
                pi += 1
            pj = pi
            while pj < len(prev_runs) and prev_runs[pj][0] < end + reach:
                uf.union(rid, prev_runs[pj][2])
                pj += 1
            if pj > pi:
                pj -= 1     # last overlapping run may also touch the next run
            pi = pj
        prev_runs = cur_runs

    labels = np.zeros((h, w), dtype=np.int32)
    root_label: dict[int, int] = {}
    next_label = 1
    for rid, (y, start, end) in enumerate(runs):
        root = uf.find(rid)
        lab = root_label.get(root)
        if lab is None:
            lab = next_label
            root_label[root] = lab
            next_label += 1
        labels[y, start:end] = lab
    return labels


def _crack_perimeters(labels: np.ndarray, n_labels: int) -> np.ndarray:
    """Per-label count of pixel edges facing background or the frame edge."""
    padded = np.pad(labels, 1, mode="constant")
    region = labels > 0
    perim = np.zeros(n_labels + 1, dtype=np.int64)
    h, w = labels.shape
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        neighbor = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        exposed = region & (neighbor != labels)
        perim += np.bincount(labels[exposed], minlength=n_labels + 1)
    return perim


def blobs_from_labels(labels: np.ndarray) -> list[Blob]:
    """Compute Blob features for every labeled region, in label order."""
    n_labels = int(labels.max())
    if n_labels == 0:
        return []
    flat = labels.ravel()
    h, w = labels.shape
    ys, xs = np.divmod(np.arange(flat.size), w)
    counts = np.bincount(flat, minlength=n_labels + 1)
    sum_x = np.bincount(flat, weights=xs, minlength=n_labels + 1)
    sum_y = np.bincount(flat, weights=ys, minlength=n_labels + 1)
    with np.errstate(invalid="ignore"):
        cx = sum_x / counts
        cy = sum_y / counts
    cheb = np.zeros(n_labels + 1, dtype=np.float64)
    inside = flat > 0
    dist = np.maximum(
        np.abs(xs[inside] - cx[flat[inside]]),
        np.abs(ys[inside] - cy[flat[inside]]),
    )
    np.maximum.at(cheb, flat[inside], dist)
    perim = _crack_perimeters(labels, n_labels)
    blobs = []
    for lab in range(1, n_labels + 1):
        area = int(counts[lab])
        p = int(perim[lab])
        blobs.append(
            Blob(
                area=area,
                centroid=(float(cx[lab]), float(cy[lab])),
                radius_rn=max(float(cheb[lab]), 0.5),
                perimeter=p,
                circularity=p / (2.0 * math.sqrt(math.pi * area)),
                label=lab,
            )
        )
    return blobs


def blob_features(
    region_pixels, frame_shape: tuple[int, int] | None = None, label: int = 1
) -> Blob:
    """Blob features for one region given as an iterable of (x, y) pixels."""
    pixels = np.asarray(list(region_pixels), dtype=np.int64).reshape(-1, 2)
    if len(pixels) == 0:
        raise ValueError("region must contain at least one pixel")
    if frame_shape is not None:
        h, w = frame_shape
        if (pixels[:, 0].min() < 0 or pixels[:, 0].max() >= w
                or pixels[:, 1].min() < 0 or pixels[:, 1].max() >= h):
            raise ValueError("region pixels fall outside the frame")
    x0, y0 = pixels[:, 0].min(), pixels[:, 1].min()
    local = np.zeros(
        (pixels[:, 1].max() - y0 + 1, pixels[:, 0].max() - x0 + 1),
        dtype=np.int32,
    )
    local[pixels[:, 1] - y0, pixels[:, 0] - x0] = 1
    blob = blobs_from_labels(local)[0]
    cx, cy = blob.centroid
    return Blob(
        area=blob.area,
        centroid=(cx + float(x0), cy + float(y0)),
        radius_rn=blob.radius_rn,
        perimeter=blob.perimeter,
        circularity=blob.circularity,
        label=label,
    )


def filter_blobs(blobs: list[Blob], config: BlobFilterConfig) -> list[Blob]:
    """Keep blobs inside the area bounds and below the circularity cap."""
    return [
        b for b in blobs
        if config.min_area <= b.area <= config.max_area
        and b.circularity <= config.max_circularity
    ]


def detect_blobs(frame: np.ndarray, config: BlobFilterConfig) -> list[Blob]:
    """Full Phase-2 chain: equalize, band-mask, label, measure, filter."""
    equalized = histogram_equalize(frame)
    mask = intensity_mask(equalized, config.intensity_lo, config.intensity_hi)
    labels = connected_components(mask, config.connectivity)
    return filter_blobs(blobs_from_labels(labels), config)
