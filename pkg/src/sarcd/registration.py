"""Rotation correction between consecutive frames.

Detects oriented binary features (segment-test corners with intensity-
centroid orientation and a steered 256-bit comparison descriptor), matches
them by Hamming distance with a mutual-consistency check, keeps the best
fraction, and fits a rigid rotation+translation about the frame center by
orthogonal Procrustes with one robust re-fit pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brief_pattern import PATCH_RADIUS, SAMPLING_PATTERN
from .imgproc import check_frame, gaussian_blur

# Bresenham circle of radius 3, clockwise from the top, used by the
# segment test.
_CIRCLE_OFFSETS = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
_ARC_LENGTH = 9
_ORIENTATION_BINS = 30          # 12-degree steering steps
_DETECT_BORDER = PATCH_RADIUS + 1
_MIN_DETECT_DIM = 64

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(1)


def _rotated_patterns() -> np.ndarray:
    """Sampling pattern pre-rotated for each orientation bin, rounded to
    integer offsets (rotation preserves the patch radius)."""
    base = np.array(SAMPLING_PATTERN, dtype=np.float64)      # (256, 4)
    pts = base.reshape(-1, 2)                                 # (512, 2)
    out = np.empty((_ORIENTATION_BINS, 512, 2), dtype=np.int64)
    for b in range(_ORIENTATION_BINS):
        theta = 2.0 * math.pi * b / _ORIENTATION_BINS
        c, s = math.cos(theta), math.sin(theta)
        out[b, :, 0] = np.rint(pts[:, 0] * c - pts[:, 1] * s)
        out[b, :, 1] = np.rint(pts[:, 0] * s + pts[:, 1] * c)
    return out


_STEERED = _rotated_patterns()

# Intensity-centroid patch: offsets within the radius-15 disk.
_cc = np.arange(-PATCH_RADIUS, PATCH_RADIUS + 1)
_cy, _cx = np.meshgrid(_cc, _cc, indexing="ij")
_DISK = (_cx * _cx + _cy * _cy) <= PATCH_RADIUS * PATCH_RADIUS


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    response: float
    orientation: float      # radians in [0, 2*pi)


@dataclass(frozen=True)
class FeatureMatch:
    index_a: int
    index_b: int
    distance: int


@dataclass(frozen=True)
class RigidTransform:
    """Rotation by `angle` about `center`, then translation by (tx, ty)."""

    angle: float
    tx: float
    ty: float
    center: tuple[float, float]

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        c, s = math.cos(self.angle), math.sin(self.angle)
        cx, cy = self.center
        dx = pts[:, 0] - cx
        dy = pts[:, 1] - cy
        out = np.empty_like(pts)
        out[:, 0] = c * dx - s * dy + cx + self.tx
        out[:, 1] = s * dx + c * dy + cy + self.ty
        return out

    def inverse(self) -> "RigidTransform":
        c, s = math.cos(self.angle), math.sin(self.angle)
        # solve R(p - c) + c + t = q for p given q
        tx = -(c * self.tx + s * self.ty)
        ty = -(-s * self.tx + c * self.ty)
        return RigidTransform(-self.angle, tx, ty, self.center)


def _segment_test(frame: np.ndarray, threshold: float) -> np.ndarray:
    """FAST-9/16 response map (0 where no corner fires).

    A pixel is a corner when a contiguous arc of >= 9 of the 16 circle
    pixels is entirely brighter than center+threshold or entirely darker
    than center-threshold.  The response is the thresholded absolute
    difference summed over the circle, for the winning polarity.
    """
    h, w = frame.shape
    interior = frame[3 : h - 3, 3 : w - 3]
    n = 16
    bright = np.empty((n, h - 6, w - 6), dtype=bool)
    dark = np.empty((n, h - 6, w - 6), dtype=bool)
    diff = np.empty((n, h - 6, w - 6), dtype=np.float64)
    for i, (dx, dy) in enumerate(_CIRCLE_OFFSETS):
        shifted = frame[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx]
        d = shifted - interior
        diff[i] = d
        bright[i] = d > threshold
        dark[i] = d < -threshold
    response = np.zeros((h - 6, w - 6), dtype=np.float64)
    for flags, sign in ((bright, 1.0), (dark, -1.0)):
        # contiguous arc >= 9 with wraparound: scan 16 starts over doubled flags
        doubled = np.concatenate([flags, flags[:_ARC_LENGTH - 1]], axis=0)
        run = doubled[:_ARC_LENGTH].sum(axis=0)
        hit = run == _ARC_LENGTH
        for start in range(1, n):
            run = run - doubled[start - 1] + doubled[start + _ARC_LENGTH - 1]
            hit |= run == _ARC_LENGTH
        if hit.any():
            score = np.maximum(sign * diff - threshold, 0.0).sum(axis=0)
            response = np.where(hit & (score > response), score, response)
    full = np.zeros((h, w), dtype=np.float64)
    full[3 : h - 3, 3 : w - 3] = response
    return full


def _orientation(smooth: np.ndarray, x: int, y: int) -> float:
    """Intensity-centroid angle over the radius-15 patch, in [0, 2*pi)."""
    patch = smooth[y - PATCH_RADIUS : y + PATCH_RADIUS + 1,
                   x - PATCH_RADIUS : x + PATCH_RADIUS + 1]
    m10 = float((patch * _cx * _DISK).sum())
    m01 = float((patch * _cy * _DISK).sum())
    return math.atan2(m01, m10) % (2.0 * math.pi)


def detect_features(
    frame: np.ndarray,
    max_count: int,
    fast_threshold: float = 20.0,
) -> list[tuple[Keypoint, np.ndarray]]:
    """Detect segment-test corners and compute steered binary descriptors.

    Returns up to `max_count` (keypoint, descriptor) pairs ordered by
    decreasing corner response; descriptors are 32-byte uint8 arrays
    packing 256 comparison bits.  An empty list (no corners) is not an
    error.
    """
    frame = check_frame(frame)
    h, w = frame.shape
    if h < _MIN_DETECT_DIM or w < _MIN_DETECT_DIM:
        raise ValueError(f"feature detection needs >= 64x64 frames, got {w}x{h}")
    if max_count < 1:
        raise ValueError(f"max_count must be positive, got {max_count}")

    response = _segment_test(frame, fast_threshold)
    # 3x3 non-max suppression
    pad = np.pad(response, 1, mode="constant")
    neighborhood = np.max(
        [pad[dy : dy + h, dx : dx + w]
         for dy in range(3) for dx in range(3)],
        axis=0,
    )
    keep = (response > 0) & (response >= neighborhood)
    keep[:_DETECT_BORDER, :] = False
    keep[-_DETECT_BORDER:, :] = False
    keep[:, :_DETECT_BORDER] = False
    keep[:, -_DETECT_BORDER:] = False
    ys, xs = np.nonzero(keep)
    if ys.size == 0:
        return []
    order = np.lexsort((xs, ys, -response[ys, xs]))[:max_count]

    smooth = gaussian_blur(frame, 2.0)      # descriptor bits compare smoothed intensities
    results: list[tuple[Keypoint, np.ndarray]] = []
    bin_width = 2.0 * math.pi / _ORIENTATION_BINS
    for idx in order:
        x, y = int(xs[idx]), int(ys[idx])
        angle = _orientation(smooth, x, y)
        b = int(round(angle / bin_width)) % _ORIENTATION_BINS
        pattern = _STEERED[b]
        samples = smooth[y + pattern[:, 1], x + pattern[:, 0]]
        bits = samples[0::2] < samples[1::2]
        desc = np.packbits(bits.astype(np.uint8))
        kp = Keypoint(float(x), float(y), float(response[y, x]), angle)
        results.append((kp, desc))
    return results


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    return int(_POPCOUNT[np.bitwise_xor(a, b)].sum())


def match_features(
    set_a: list[np.ndarray] | np.ndarray,
    set_b: list[np.ndarray] | np.ndarray,
) -> list[FeatureMatch]:
    """Mutual nearest-neighbor matching by Hamming distance.

    A pair survives only when each descriptor is the other's nearest
    neighbor (ties resolved to the lowest index).
    """
    a = np.asarray(set_a, dtype=np.uint8)
    b = np.asarray(set_b, dtype=np.uint8)
    if a.size == 0 or b.size == 0:
        raise ValueError("descriptor sets must be non-empty")
    dist = _POPCOUNT[np.bitwise_xor(a[:, None, :], b[None, :, :])].sum(axis=2)
    best_ab = dist.argmin(axis=1)
    best_ba = dist.argmin(axis=0)
    matches = [
        FeatureMatch(i, int(j), int(dist[i, j]))
        for i, j in enumerate(best_ab)
        if best_ba[j] == i
    ]
    return matches


def filter_matches(
    matches: list[FeatureMatch], keep_fraction: float
) -> list[FeatureMatch]:
    """Keep the best ceil(keep_fraction * count) matches by distance.

    Stable sort: equal distances keep their original relative order.
    """
    if not matches:
        raise ValueError("no matches to filter")
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction!r}")
    ordered = sorted(matches, key=lambda m: m.distance)
    keep = math.ceil(keep_fraction * len(ordered))
    return ordered[:keep]


def _procrustes(src: np.ndarray, dst: np.ndarray, center) -> RigidTransform:
    sbar = src.mean(axis=0)
    dbar = dst.mean(axis=0)
    ss = src - sbar
    dd = dst - dbar
    dot = float((ss * dd).sum())
    cross = float((ss[:, 0] * dd[:, 1] - ss[:, 1] * dd[:, 0]).sum())
    if dot == 0.0 and cross == 0.0:
        raise ValueError("degenerate correspondences (coincident points)")
    angle = math.atan2(cross, dot)
    c, s = math.cos(angle), math.sin(angle)
    cx, cy = center
    rx = c * (sbar[0] - cx) - s * (sbar[1] - cy) + cx
    ry = s * (sbar[0] - cx) + c * (sbar[1] - cy) + cy
    return RigidTransform(angle, float(dbar[0] - rx), float(dbar[1] - ry), (cx, cy))


def estimate_transform(
    pairs: list[tuple[tuple[float, float], tuple[float, float]]] | np.ndarray,
    center: tuple[float, float],
) -> RigidTransform:
    """Least-squares rigid fit (rotation about `center` + translation).

    Closed-form 2-D orthogonal Procrustes on the centered point sets, with
    one robust re-fit discarding pairs whose residual exceeds 3x the
    median residual.
    """
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1:] != (2, 2):
        arr = arr.reshape(-1, 2, 2)
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 point pairs, got {arr.shape[0]}")
    src, dst = arr[:, 0, :], arr[:, 1, :]
    if np.allclose(src, src[0]) or np.allclose(dst, dst[0]):
        raise ValueError("degenerate correspondences (coincident points)")
    fit = _procrustes(src, dst, center)
    residual = np.hypot(*(fit.apply(src) - dst).T)
    med = float(np.median(residual))
    keep = residual <= max(3.0 * med, 1e-9)
    if 2 <= keep.sum() < len(src):
        try:
            fit = _procrustes(src[keep], dst[keep], center)
        except ValueError:
            pass        # inlier set degenerate, keep the full fit
    return fit


def warp_frame(frame: np.ndarray, transform: RigidTransform) -> np.ndarray:
    """Resample a frame through the transform (inverse-mapped bilinear).

    Output pixel p takes the source value at transform^-1(p); samples
    falling outside the source are 0.
    """
    frame = check_frame(frame)
    h, w = frame.shape
    inv = transform.inverse()
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    src = inv.apply(np.column_stack([xs.ravel(), ys.ravel()]))
    sx = src[:, 0].reshape(h, w)
    sy = src[:, 1].reshape(h, w)
    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)
    x0 = np.minimum(sx.astype(np.int64), w - 2)
    y0 = np.minimum(sy.astype(np.int64), h - 2)
    fx = sx - x0
    fy = sy - y0
    out = ((1 - fx) * (1 - fy) * frame[y0, x0]
           + fx * (1 - fy) * frame[y0, x0 + 1]
           + (1 - fx) * fy * frame[y0 + 1, x0]
           + fx * fy * frame[y0 + 1, x0 + 1])
    out[~inside] = 0.0
    return out
