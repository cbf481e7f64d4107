"""Sparse Lucas-Kanade flow over a fixed point grid (Phase 1).

Flow is solved per point by iterative LK (central-difference gradients on
the earlier frame, 2x2 structure tensor over a square window, bilinear
resampling of the later frame).  Grid points whose motion magnitude and
direction both deviate from their neighborhood average beyond the k1/k2
thresholds become tracked points, revalidated each frame against the
running global mean and evicted after k3 consecutive non-interesting
frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numba import njit, prange

from .imgproc import check_frame

DEFAULT_EPSILON_V = 0.05        # px; magnitude floor guarding relative deviations
DEFAULT_MIN_EIG_FACTOR = 1e-4   # per window pixel; structure-tensor validity floor
CONVERGENCE_EPS = 0.01          # px; iteration stops below this update


@dataclass(frozen=True)
class PointGrid:
    spacing_d: int
    margin: int
    width: int
    height: int
    points: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class FlowSample:
    origin: tuple[float, float]
    target: tuple[float, float]
    magnitude: float
    angle: float
    valid: bool

    @property
    def moving(self) -> bool:
        return self.valid and self.magnitude > 0.0


@dataclass(frozen=True)
class NeighborhoodStats:
    mean_motion: float
    mean_angle: float | None    # None when no moving sample contributed
    sample_count: int


@dataclass
class TrackedPoint:
    position: tuple[int, int]
    counter: int = 0
    last_motion: float = 0.0
    last_angle: float | None = None


@dataclass
class FlowState:
    tracked: list[TrackedPoint] = field(default_factory=list)
    running_mean_vt: float = 0.0
    frames_seen: int = 0
    last_frame_mean: float | None = None
    grid: PointGrid | None = None


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.remainder(angle, 2.0 * math.pi)
    if a <= -math.pi:
        a = math.pi
    return a


def circular_diff(a: float, b: float) -> float:
    """Signed circular difference a - b in (-pi, pi]."""
    return wrap_angle(a - b)


def apparent_movement(p1: Sequence[float], p2: Sequence[float]) -> float:
    """Euclidean distance between a point and its predicted location."""
    x1, y1 = p1
    x2, y2 = p2
    if not all(map(math.isfinite, (x1, y1, x2, y2))):
        raise ValueError("coordinates must be finite")
    return math.hypot(x2 - x1, y2 - y1)


def motion_angle(p1: Sequence[float], p2: Sequence[float]) -> float:
    """Full-quadrant motion direction atan2(y2-y1, x2-x1) in (-pi, pi]."""
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and y1 == y2:
        raise ValueError("motion angle undefined for coincident points")
    return wrap_angle(math.atan2(y2 - y1, x2 - x1))


def build_point_grid(
    width: int, height: int, spacing_d: int, margin: int
) -> PointGrid:
    """Uniform grid at (margin + i*d, margin + j*d), row-major.

    Coordinates stay <= dim - 1 - margin on each axis.
    """
    if spacing_d < 4:
        raise ValueError(f"grid spacing must be >= 4, got {spacing_d}")
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    xs = range(margin, width - margin, spacing_d)
    ys = range(margin, height - margin, spacing_d)
    points = tuple((x, y) for y in ys for x in xs)
    if not points:
        raise ValueError(
            f"empty grid for {width}x{height}, d={spacing_d}, margin={margin}"
        )
    return PointGrid(spacing_d, margin, width, height, points)


@njit(cache=True, parallel=True)
def _lk_kernel(prev, nxt, grad_x, grad_y, pts, v_init, radius, max_iter,
               eps, min_eig):  # pragma: no cover - exercised via wrappers
    n_pts = pts.shape[0]
    height, width = prev.shape
    out = np.empty((n_pts, 2))
    status = np.zeros(n_pts, dtype=np.int8)     # 0 weak, 1 ok, 2 exited
    # points are independent: each loop iteration writes only its own slot,
    # so parallel scheduling cannot change the result
    for i in prange(n_pts):
        x = pts[i, 0]
        y = pts[i, 1]
        gxx = 0.0
        gxy = 0.0
        gyy = 0.0
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                a = grad_x[y + dy, x + dx]
                b = grad_y[y + dy, x + dx]
                gxx += a * a
                gxy += a * b
                gyy += b * b
        trace = gxx + gyy
        det = gxx * gyy - gxy * gxy
        disc = trace * trace / 4.0 - det
        if disc < 0.0:
            disc = 0.0
        eig_min = trace / 2.0 - math.sqrt(disc)
        out[i, 0] = x
        out[i, 1] = y
        if eig_min < min_eig or det == 0.0:
            continue
        vx = v_init[i, 0]
        vy = v_init[i, 1]
        exited = False
        for _ in range(max_iter):
            if (x + vx - radius < 0.0 or x + vx + radius > width - 1
                    or y + vy - radius < 0.0 or y + vy + radius > height - 1):
                exited = True
                break
            bx = 0.0
            by = 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    sx = x + dx + vx
                    sy = y + dy + vy
                    x0 = int(math.floor(sx))
                    y0 = int(math.floor(sy))
                    if x0 > width - 2:
                        x0 = width - 2
                    if y0 > height - 2:
                        y0 = height - 2
                    fx = sx - x0
                    fy = sy - y0
                    warped = ((1.0 - fx) * (1.0 - fy) * nxt[y0, x0]
                              + fx * (1.0 - fy) * nxt[y0, x0 + 1]
                              + (1.0 - fx) * fy * nxt[y0 + 1, x0]
                              + fx * fy * nxt[y0 + 1, x0 + 1])
                    diff = prev[y + dy, x + dx] - warped
                    bx += diff * grad_x[y + dy, x + dx]
                    by += diff * grad_y[y + dy, x + dx]
            dvx = (gyy * bx - gxy * by) / det
            dvy = (gxx * by - gxy * bx) / det
            vx += dvx
            vy += dvy
            if dvx * dvx + dvy * dvy < eps * eps:
                break
        if exited:
            status[i] = 2
        else:
            status[i] = 1
            out[i, 0] = x + vx
            out[i, 1] = y + vy
    return out, status


def _central_gradients(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(frame)
    gy = np.zeros_like(frame)
    gx[:, 1:-1] = (frame[:, 2:] - frame[:, :-2]) / 2.0
    gy[1:-1, :] = (frame[2:, :] - frame[:-2, :]) / 2.0
    return gx, gy


def _downsample2(frame: np.ndarray) -> np.ndarray:
    h, w = frame.shape
    h2, w2 = h // 2, w // 2
    return frame[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def flow_at_points(
    prev: np.ndarray,
    nxt: np.ndarray,
    pts: np.ndarray,
    window_radius: int,
    max_iterations: int,
    min_eig_factor: float = DEFAULT_MIN_EIG_FACTOR,
    pyramid_levels: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Array-level LK solve; returns (targets, magnitudes, angles, valid).

    With pyramid_levels=2 a half-resolution pass seeds the full-resolution
    iterations, extending the reachable motion beyond the window radius.
    """
    pts = np.ascontiguousarray(pts, dtype=np.int64)
    min_eig = min_eig_factor * (2 * window_radius + 1) ** 2
    v_init = np.zeros((len(pts), 2), dtype=np.float64)
    if pyramid_levels >= 2 and min(prev.shape) >= 4 * (window_radius + 1):
        half_prev = _downsample2(prev)
        half_nxt = _downsample2(nxt)
        hgx, hgy = _central_gradients(half_prev)
        half_pts = pts // 2
        hh, hw = half_prev.shape
        r1 = window_radius + 1
        np.clip(half_pts[:, 0], r1, hw - 1 - r1, out=half_pts[:, 0])
        np.clip(half_pts[:, 1], r1, hh - 1 - r1, out=half_pts[:, 1])
        half_out, half_status = _lk_kernel(
            half_prev, half_nxt, hgx, hgy, half_pts, v_init.copy(),
            window_radius, max_iterations, CONVERGENCE_EPS, min_eig,
        )
        seeded = half_status == 1
        v_init[seeded] = 2.0 * (half_out[seeded] - half_pts[seeded])
    gx, gy = _central_gradients(prev)
    out, status = _lk_kernel(
        prev, nxt, gx, gy, pts, v_init,
        window_radius, max_iterations, CONVERGENCE_EPS, min_eig,
    )
    valid = status == 1
    delta = out - pts
    magnitudes = np.hypot(delta[:, 0], delta[:, 1])
    angles = np.arctan2(delta[:, 1], delta[:, 0])
    angles[angles <= -math.pi] = math.pi
    magnitudes[~valid] = 0.0
    angles[~valid] = 0.0
    return out, magnitudes, angles, valid


def lk_flow(
    prev: np.ndarray,
    nxt: np.ndarray,
    points: Iterable[Sequence[int]],
    window_radius: int,
    max_iterations: int,
    min_eig_factor: float = DEFAULT_MIN_EIG_FACTOR,
    pyramid_levels: int = 1,
) -> list[FlowSample]:
    """Iterative LK flow for a sparse set of integer pixel positions."""
    prev = check_frame(prev)
    nxt = check_frame(nxt)
    if prev.shape != nxt.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {nxt.shape}")
    if window_radius < 1:
        raise ValueError(f"window radius must be >= 1, got {window_radius}")
    if max_iterations < 1:
        raise ValueError(f"max_iterations must be >= 1, got {max_iterations}")
    pts = np.asarray(list(points), dtype=np.int64).reshape(-1, 2)
    h, w = prev.shape
    lim = window_radius + 1
    if len(pts) and (
        pts[:, 0].min() < lim or pts[:, 0].max() > w - 1 - lim
        or pts[:, 1].min() < lim or pts[:, 1].max() > h - 1 - lim
    ):
        raise ValueError("points must lie window_radius + 1 inside the frame")
    out, mags, angs, valid = flow_at_points(
        prev, nxt, pts, window_radius, max_iterations,
        min_eig_factor, pyramid_levels,
    )
    return [
        FlowSample(
            origin=(float(pts[i, 0]), float(pts[i, 1])),
            target=(float(out[i, 0]), float(out[i, 1])),
            magnitude=float(mags[i]),
            angle=float(angs[i]),
            valid=bool(valid[i]),
        )
        for i in range(len(pts))
    ]


def _stats_from_arrays(
    mags: np.ndarray, angs: np.ndarray, valid: np.ndarray
) -> NeighborhoodStats | None:
    count = int(valid.sum())
    if count == 0:
        return None
    mean_motion = float(mags[valid].mean())
    moving = valid & (mags > 0.0)
    if moving.any():
        mean_angle = float(
            math.atan2(np.sin(angs[moving]).sum(), np.cos(angs[moving]).sum())
        )
        mean_angle = wrap_angle(mean_angle)
    else:
        mean_angle = None
    return NeighborhoodStats(mean_motion, mean_angle, count)


def neighborhood_points(
    center: Sequence[int], window_n: int
) -> list[tuple[int, int]]:
    """Pixels of the n x n block centered on a grid point, row-major."""
    if window_n < 3 or window_n % 2 == 0:
        raise ValueError(f"neighborhood size must be odd and >= 3, got {window_n}")
    cx, cy = int(center[0]), int(center[1])
    half = window_n // 2
    return [
        (cx + dx, cy + dy)
        for dy in range(-half, half + 1)
        for dx in range(-half, half + 1)
    ]


def neighborhood_stats(
    center: Sequence[int],
    window_n: int,
    sample_at: Callable[[int, int], FlowSample | None],
) -> NeighborhoodStats | None:
    """Average motion magnitude and circular-mean direction of the n x n
    block around a point; None when no valid sample exists."""
    samples = [sample_at(x, y) for x, y in neighborhood_points(center, window_n)]
    samples = [s for s in samples if s is not None]
    if not samples:
        return None
    mags = np.array([s.magnitude for s in samples])
    angs = np.array([s.angle for s in samples])
    valid = np.array([s.valid for s in samples], dtype=bool)
    return _stats_from_arrays(mags, angs, valid)


def select_interesting(
    sample: FlowSample,
    stats: NeighborhoodStats,
    k1: float,
    k2: float,
    epsilon_v: float = DEFAULT_EPSILON_V,
) -> bool:
    """Two-threshold test: both the relative motion deviation and the
    normalized circular angle deviation must exceed their thresholds.

    A motionless sample has no direction, so the angle clause (and hence
    the conjunction) fails for it; likewise when the neighborhood has no
    moving sample to define a mean direction.
    """
    if stats is None or stats.sample_count < 1:
        raise ValueError("stats must come from at least one valid sample")
    if not sample.valid:
        return False
    motion_dev = abs(stats.mean_motion - sample.magnitude) / max(
        stats.mean_motion, epsilon_v
    )
    if motion_dev <= k1:
        return False
    if stats.mean_angle is None or not sample.moving:
        return False
    angle_dev = abs(circular_diff(stats.mean_angle, sample.angle)) / math.pi
    return angle_dev > k2


def frame_mean_motion(stats_list: Sequence[NeighborhoodStats]) -> float:
    """Mean of the neighborhood mean motions over grid points with data."""
    if not stats_list:
        raise ValueError("no neighborhood stats available for this frame")
    return float(np.mean([s.mean_motion for s in stats_list]))


def update_running_mean(state: FlowState, vbar_t: float) -> FlowState:
    """Fold one frame mean into the running mean (incremental formula)."""
    if vbar_t < 0:
        raise ValueError(f"frame mean motion must be >= 0, got {vbar_t}")
    t = state.frames_seen + 1
    state.running_mean_vt = ((t - 1) * state.running_mean_vt + vbar_t) / t
    state.frames_seen = t
    state.last_frame_mean = vbar_t
    return state


def revalidate_tracked(
    state: FlowState,
    current_motion: Callable[[tuple[int, int]], float | None],
    new_interesting: Sequence[TrackedPoint] = (),
    k1: float = 0.5,
    k3: int = 3,
    epsilon_v: float = DEFAULT_EPSILON_V,
) -> FlowState:
    """Update persistence counters against the global running mean.

    A tracked point whose motion still deviates (relative deviation > k1)
    gets its counter reset to zero; otherwise the counter increments, and
    points exceeding k3 are evicted.  Newly interesting points are merged
    in afterwards: an exact-position hit resets the existing entry, a new
    position is appended with counter zero.
    """
    if state.frames_seen < 1:
        raise ValueError("revalidation requires at least one processed frame")
    vbar = state.running_mean_vt
    survivors: list[TrackedPoint] = []
    for point in state.tracked:
        motion = current_motion(point.position)
        if motion is None:
            point.counter += 1          # no flow evidence this frame
        else:
            point.last_motion = motion
            deviation = abs(vbar - motion) / max(vbar, epsilon_v)
            if deviation > k1:
                point.counter = 0
            else:
                point.counter += 1
        if point.counter <= k3:
            survivors.append(point)
    by_position = {p.position: p for p in survivors}
    for new in new_interesting:
        existing = by_position.get(new.position)
        if existing is not None:
            existing.counter = 0
            existing.last_motion = new.last_motion
            existing.last_angle = new.last_angle
        else:
            point = TrackedPoint(new.position, 0, new.last_motion, new.last_angle)
            survivors.append(point)
            by_position[new.position] = point
    state.tracked = survivors
    return state


def process_frame_flow(
    state: FlowState,
    prev: np.ndarray,
    cur: np.ndarray,
    *,
    spacing_d: int = 16,
    window_n: int = 7,
    window_radius: int = 7,
    max_iterations: int = 10,
    pyramid_levels: int = 1,
    k1: float = 0.5,
    k2: float = 0.15,
    k3: int = 3,
    epsilon_v: float = DEFAULT_EPSILON_V,
    min_eig_factor: float = DEFAULT_MIN_EIG_FACTOR,
) -> tuple[FlowState, list[TrackedPoint]]:
    """Run one Phase-1 step on a consecutive frame pair.

    Builds (or reuses) the point grid, solves dense LK flow on each grid
    point's n x n neighborhood, applies the two-threshold selection,
    folds the frame mean into the running mean, and revalidates the
    tracked-point counters.  Returns the state and the surviving tracked
    points for this frame.
    """
    prev = check_frame(prev)
    cur = check_frame(cur)
    if prev.shape != cur.shape:
        raise ValueError(f"frame shapes differ: {prev.shape} vs {cur.shape}")
    h, w = prev.shape
    margin = window_radius + 1 + window_n // 2
    if (state.grid is None or state.grid.width != w or state.grid.height != h
            or state.grid.spacing_d != spacing_d or state.grid.margin != margin):
        state.grid = build_point_grid(w, h, spacing_d, margin)
    grid = state.grid

    block = window_n * window_n
    centers = np.asarray(grid.points, dtype=np.int64)
    half = window_n // 2
    offs = np.array(
        [(dx, dy) for dy in range(-half, half + 1) for dx in range(-half, half + 1)],
        dtype=np.int64,
    )
    pts = (centers[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    _, mags, angs, valid = flow_at_points(
        prev, cur, pts, window_radius, max_iterations,
        min_eig_factor, pyramid_levels,
    )
    mags = mags.reshape(-1, block)
    angs = angs.reshape(-1, block)
    valid = valid.reshape(-1, block)

    counts = valid.sum(axis=1)
    has_data = counts > 0
    safe_counts = np.maximum(counts, 1)
    vbar_k = (mags * valid).sum(axis=1) / safe_counts
    moving = valid & (mags > 0.0)
    sin_sum = (np.sin(angs) * moving).sum(axis=1)
    cos_sum = (np.cos(angs) * moving).sum(axis=1)
    has_direction = moving.any(axis=1)
    theta_bar = np.arctan2(sin_sum, cos_sum)

    center_idx = half * window_n + half
    v_c = mags[:, center_idx]
    theta_c = angs[:, center_idx]
    center_valid = valid[:, center_idx]
    center_moving = moving[:, center_idx]

    motion_dev = np.abs(vbar_k - v_c) / np.maximum(vbar_k, epsilon_v)
    angle_diff = np.mod(theta_bar - theta_c + math.pi, 2.0 * math.pi) - math.pi
    angle_diff[angle_diff <= -math.pi] = math.pi
    angle_dev = np.abs(angle_diff) / math.pi
    interesting = (
        has_data & center_valid & center_moving & has_direction
        & (motion_dev > k1) & (angle_dev > k2)
    )

    new_points = [
        TrackedPoint(
            position=(int(centers[g, 0]), int(centers[g, 1])),
            counter=0,
            last_motion=float(v_c[g]),
            last_angle=float(wrap_angle(float(theta_c[g]))),
        )
        for g in np.nonzero(interesting)[0]
    ]

    if has_data.any():
        vbar_t = float(vbar_k[has_data].mean())
        update_running_mean(state, vbar_t)

    center_motion = {
        (int(centers[g, 0]), int(centers[g, 1])): float(v_c[g])
        for g in range(len(centers))
        if center_valid[g]
    }
    if state.frames_seen >= 1:
        revalidate_tracked(
            state, center_motion.get, new_points, k1=k1, k3=k3,
            epsilon_v=epsilon_v,
        )
    return state, list(state.tracked)
