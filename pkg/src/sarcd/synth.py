"""Synthetic circular-SAR video generator with ground truth.

Scenes are composed in un-rotated coordinates (value-noise background,
static structures, moving targets on straight trajectories), rotated as a
whole about the frame center by the per-frame rotation angle, and
optionally degraded by multiplicative gamma speckle.  Everything is
derived from integer seeds so the output is byte-identical across runs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imageio import write_pgm
from .registration import RigidTransform, warp_frame

log = logging.getLogger(__name__)

# Moving faster than half the default grid spacing per frame risks
# stepping over the detector's sampling ability.
SPEED_WARN_LIMIT = 8.0

_NOISE_OCTAVES = ((32, 0.5), (16, 0.3), (8, 0.2))


@dataclass(frozen=True)
class StaticObject:
    shape: str                      # "rect" or "disk"
    position: tuple[float, float]   # center (x, y)
    size: tuple[float, float] | float
    intensity: float

    def half_extent(self) -> float:
        if self.shape == "rect":
            w, h = self.size
            return math.hypot(w, h) / 2.0
        return float(self.size)


@dataclass(frozen=True)
class MovingTarget:
    id: int
    shape: str
    size: tuple[float, float] | float
    intensity: float
    start: tuple[float, float]
    velocity: tuple[float, float]   # px/frame in scene coordinates

    def center_at(self, t: int) -> tuple[float, float]:
        return (
            self.start[0] + t * self.velocity[0],
            self.start[1] + t * self.velocity[1],
        )

    def half_extent(self) -> float:
        if self.shape == "rect":
            w, h = self.size
            return math.hypot(w, h) / 2.0
        return float(self.size)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    frame_count: int
    rotation_rate: float            # degrees/frame about the frame center
    background: tuple[int, float, float]    # (texture seed, mean, amplitude)
    static_objects: tuple[StaticObject, ...] = ()
    targets: tuple[MovingTarget, ...] = ()
    speckle_looks: float | None = None      # None disables speckle
    rng_seed: int = 0

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError("scene must be at least 16x16")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.speckle_looks is not None and self.speckle_looks < 1.0:
            raise ValueError(f"speckle looks must be >= 1, got {self.speckle_looks}")
        seed, mean, amp = self.background
        if not (0.0 <= mean <= 255.0) or amp < 0.0:
            raise ValueError("background mean must be in [0,255], amplitude >= 0")
        self._validate_geometry()
        for tgt in self.targets:
            speed = math.hypot(*tgt.velocity)
            if speed > SPEED_WARN_LIMIT:
                log.warning(
                    "target %d moves %.1f px/frame, above the %.0f px/frame "
                    "detectability guideline (half the default grid spacing)",
                    tgt.id, speed, SPEED_WARN_LIMIT,
                )

    def center(self) -> tuple[float, float]:
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)

    def rotation_at(self, t: int) -> float:
        return math.radians(t * self.rotation_rate)

    def _validate_geometry(self) -> None:
        cx, cy = self.center()
        for t in range(self.frame_count):
            angle = self.rotation_at(t)
            c, s = math.cos(angle), math.sin(angle)
            items = [(obj.position, obj.half_extent(), "static object")
                     for obj in self.static_objects]
            items += [(tgt.center_at(t), tgt.half_extent(), f"target {tgt.id}")
                      for tgt in self.targets]
            for (px, py), ext, name in items:
                rx = c * (px - cx) - s * (py - cy) + cx
                ry = s * (px - cx) + c * (py - cy) + cy
                if (rx - ext < 0 or rx + ext > self.width - 1
                        or ry - ext < 0 or ry + ext > self.height - 1):
                    raise ValueError(
                        f"{name} leaves the frame at frame {t} "
                        f"(center {rx:.1f},{ry:.1f}, extent {ext:.1f})"
                    )


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def value_noise(width: int, height: int, seed: int) -> np.ndarray:
    """Seeded multi-octave value noise in [-1, 1]."""
    rng = np.random.default_rng(seed)
    out = np.zeros((height, width))
    for spacing, weight in _NOISE_OCTAVES:
        gw = width // spacing + 2
        gh = height // spacing + 2
        lattice = rng.random((gh, gw))
        xs = np.arange(width) / spacing
        ys = np.arange(height) / spacing
        x0 = xs.astype(np.int64)
        y0 = ys.astype(np.int64)
        fx = _smoothstep(xs - x0)[None, :]
        fy = _smoothstep(ys - y0)[:, None]
        v00 = lattice[np.ix_(y0, x0)]
        v01 = lattice[np.ix_(y0, x0 + 1)]
        v10 = lattice[np.ix_(y0 + 1, x0)]
        v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
        layer = ((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v01
                 + (1 - fx) * fy * v10 + fx * fy * v11)
        out += weight * (2.0 * layer - 1.0)
    return out


def _paint_shape(
    frame: np.ndarray,
    shape: str,
    center: tuple[float, float],
    size,
    intensity: float,
) -> None:
    h, w = frame.shape
    cx, cy = center
    if shape == "rect":
        sw, sh = size
        x_lo = max(int(math.ceil(cx - sw / 2.0)), 0)
        x_hi = min(int(math.ceil(cx + sw / 2.0)), w)    # half-open
        y_lo = max(int(math.ceil(cy - sh / 2.0)), 0)
        y_hi = min(int(math.ceil(cy + sh / 2.0)), h)
        frame[y_lo:y_hi, x_lo:x_hi] = intensity
    elif shape == "disk":
        r = float(size)
        x_lo = max(int(math.floor(cx - r)), 0)
        x_hi = min(int(math.ceil(cx + r)) + 1, w)
        y_lo = max(int(math.floor(cy - r)), 0)
        y_hi = min(int(math.ceil(cy + r)) + 1, h)
        ys, xs = np.mgrid[y_lo:y_hi, x_lo:x_hi]
        mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
        frame[y_lo:y_hi, x_lo:x_hi][mask] = intensity
    else:
        raise ValueError(f"unknown shape {shape!r} (expected 'rect' or 'disk')")


def render_clean_frame(
    spec: SceneSpec, t: int
) -> tuple[np.ndarray, list[tuple[int, float, float]]]:
    """Render frame t without speckle.

    Returns the frame and the true target centers mapped through the same
    rotation the frame received.
    """
    if not (0 <= t < spec.frame_count):
        raise ValueError(f"frame index {t} outside [0, {spec.frame_count})")
    seed, mean, amplitude = spec.background
    scene = np.clip(
        mean + amplitude * value_noise(spec.width, spec.height, int(seed)),
        0.0, 255.0,
    )
    for obj in spec.static_objects:
        _paint_shape(scene, obj.shape, obj.position, obj.size, obj.intensity)
    for tgt in spec.targets:
        _paint_shape(scene, tgt.shape, tgt.center_at(t), tgt.size, tgt.intensity)
    angle = spec.rotation_at(t)
    centers = []
    if angle != 0.0:
        rotation = RigidTransform(angle, 0.0, 0.0, spec.center())
        scene = warp_frame(scene, rotation)
        for tgt in spec.targets:
            rx, ry = rotation.apply([tgt.center_at(t)])[0]
            centers.append((tgt.id, float(rx), float(ry)))
    else:
        for tgt in spec.targets:
            cx, cy = tgt.center_at(t)
            centers.append((tgt.id, float(cx), float(cy)))
    return scene, centers


def speckle_rng(rng_seed: int, frame_index: int) -> np.random.Generator:
    """Per-frame speckle stream, fully determined by (seed, frame index)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(rng_seed), spawn_key=(int(frame_index),))
    )


def apply_speckle(
    frame: np.ndarray, looks: float, rng: np.random.Generator
) -> np.ndarray:
    """Multiply by i.i.d. gamma speckle with unit mean and variance 1/looks."""
    if looks < 1.0:
        raise ValueError(f"speckle looks must be >= 1, got {looks}")
    frame = np.asarray(frame, dtype=np.float64)
    multiplier = rng.gamma(shape=looks, scale=1.0 / looks, size=frame.shape)
    return np.clip(frame * multiplier, 0.0, 255.0)


def render_frame(
    spec: SceneSpec, t: int
) -> tuple[np.ndarray, list[tuple[int, float, float]]]:
    """Render frame t including speckle when the spec enables it."""
    frame, centers = render_clean_frame(spec, t)
    if spec.speckle_looks is not None:
        frame = apply_speckle(frame, spec.speckle_looks, speckle_rng(spec.rng_seed, t))
    return frame, centers


def generate_sequence(spec: SceneSpec, output_dir: str | Path) -> tuple[list[Path], Path]:
    """Write all frames as PGM plus ground_truth.jsonl; reproducible."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    frame_paths: list[Path] = []
    gt_path = out / "ground_truth.jsonl"
    try:
        with open(gt_path, "w", encoding="ascii") as gt:
            for t in range(spec.frame_count):
                frame, centers = render_frame(spec, t)
                path = out / f"frame_{t:06d}.pgm"
                write_pgm(path, frame)
                frame_paths.append(path)
                record = {
                    "frame": t,
                    "targets": [
                        {"id": tid, "x": x, "y": y} for tid, x, y in centers
                    ],
                }
                gt.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing sequence under {out}: {exc}") from exc
    return frame_paths, gt_path


def load_ground_truth(path: str | Path) -> dict[int, list[tuple[int, float, float]]]:
    """Read ground_truth.jsonl into {frame: [(target id, x, y)]}."""
    truth: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                frame = int(record["frame"])
                targets = [
                    (int(t["id"]), float(t["x"]), float(t["y"]))
                    for t in record["targets"]
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad ground-truth record") from exc
            truth[frame] = targets
    return truth


def _shape_size(shape: str, raw) -> tuple[float, float] | float:
    if shape == "rect":
        w, h = raw
        return (float(w), float(h))
    return float(raw)


def scene_spec_from_dict(data: dict) -> SceneSpec:
    """Build a SceneSpec from parsed JSON, rejecting unknown keys."""
    known = {
        "width", "height", "frame_count", "rotation_rate", "background",
        "static_objects", "targets", "speckle_looks", "rng_seed",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown scene spec keys: {sorted(unknown)}")
    try:
        bg = data["background"]
        background = (
            int(bg["texture_seed"]),
            float(bg["mean_intensity"]),
            float(bg["texture_amplitude"]),
        )
        statics = tuple(
            StaticObject(
                shape=obj["shape"],
                position=(float(obj["position"][0]), float(obj["position"][1])),
                size=_shape_size(obj["shape"], obj["size"]),
                intensity=float(obj["intensity"]),
            )
            for obj in data.get("static_objects", [])
        )
        targets = tuple(
            MovingTarget(
                id=int(tgt["id"]),
                shape=tgt["shape"],
                size=_shape_size(tgt["shape"], tgt["size"]),
                intensity=float(tgt["intensity"]),
                start=(float(tgt["start"][0]), float(tgt["start"][1])),
                velocity=(float(tgt["velocity"][0]), float(tgt["velocity"][1])),
            )
            for tgt in data.get("targets", [])
        )
        looks_raw = data.get("speckle_looks", "none")
        looks = None if looks_raw == "none" else float(looks_raw)
        return SceneSpec(
            width=int(data["width"]),
            height=int(data["height"]),
            frame_count=int(data["frame_count"]),
            rotation_rate=float(data["rotation_rate"]),
            background=background,
            static_objects=statics,
            targets=targets,
            speckle_looks=looks,
            rng_seed=int(data.get("rng_seed", 0)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed scene spec: {exc}") from exc


def load_scene_spec(path: str | Path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    return scene_spec_from_dict(data)
