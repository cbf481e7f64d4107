"""Pipeline orchestration: configuration, frame I/O, evaluation, annotation.

Turns the per-module primitives into the runnable detector: consecutive
frame pairs are enhanced, optionally rotation-corrected, run through the
flow tracker and the blob detector, and fused into per-frame detections
that can be serialized, scored against ground truth, and drawn back onto
frames.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import imgproc, registration
from .blob import Blob, BlobFilterConfig, detect_blobs, max_area_for_spacing
from .fusion import Detection, fuse
from .imageio import ImageFormatError, read_image
from .optical_flow import FlowState, TrackedPoint, process_frame_flow

log = logging.getLogger(__name__)


class InputError(Exception):
    """Invalid input data (missing/malformed files, inconsistent frames)."""


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class EnhancementConfig:
    sigma: float = 2.0
    contrast_gain: float = 2.0
    binarize_for_flow: bool = False

    def validate(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"enhancement.sigma must be > 0, got {self.sigma}")
        if self.contrast_gain < 1.0:
            raise ValueError(
                f"enhancement.contrast_gain must be >= 1, got {self.contrast_gain}"
            )


@dataclass
class RegistrationConfig:
    enabled: bool = False
    max_features: int = 500
    keep_fraction: float = 0.25
    fast_threshold: float = 20.0

    def validate(self):
        if self.max_features < 2:
            raise ValueError("registration.max_features must be >= 2")
        if not (0.0 < self.keep_fraction <= 1.0):
            raise ValueError("registration.keep_fraction must be in (0, 1]")
        if self.fast_threshold <= 0:
            raise ValueError("registration.fast_threshold must be > 0")


@dataclass
class FlowConfig:
    d: int = 16
    n: int = 9
    window_radius: int = 7
    max_iterations: int = 10
    pyramid_levels: int = 1
    k1: float = 0.5
    k2: float = 0.15
    k3: int = 3
    epsilon_v: float = 0.05

    def validate(self):
        if self.d < 4:
            raise ValueError("flow.d must be >= 4")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError("flow.n must be odd and >= 3")
        if self.window_radius < 1:
            raise ValueError("flow.window_radius must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("flow.max_iterations must be >= 1")
        if self.pyramid_levels not in (1, 2):
            raise ValueError("flow.pyramid_levels must be 1 or 2")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("flow.k1 and flow.k2 must be > 0")
        if self.k3 < 0:
            raise ValueError("flow.k3 must be >= 0")
        if self.epsilon_v <= 0:
            raise ValueError("flow.epsilon_v must be > 0")


@dataclass
class BlobConfig:
    min_area: float = 9.0
    max_area: float | None = None       # None derives pi*(d/2)^2 from flow.d
    intensity_lo: float = 0.0
    intensity_hi: float = 125.0
    max_circularity: float = 1.5
    connectivity: int = 8

    def resolve(self, spacing_d: int) -> BlobFilterConfig:
        max_area = self.max_area
        if max_area is None:
            max_area = max_area_for_spacing(spacing_d)
        return BlobFilterConfig(
            min_area=self.min_area,
            max_area=max_area,
            intensity_lo=self.intensity_lo,
            intensity_hi=self.intensity_hi,
            max_circularity=self.max_circularity,
            connectivity=self.connectivity,
        )


@dataclass
class OutputConfig:
    emit_annotated: bool = False

    def validate(self):
        pass


@dataclass
class PipelineConfig:
    enhancement: EnhancementConfig = field(default_factory=EnhancementConfig)
    registration: RegistrationConfig = field(default_factory=RegistrationConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    blob: BlobConfig = field(default_factory=BlobConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "PipelineConfig":
        self.enhancement.validate()
        self.registration.validate()
        self.flow.validate()
        self.output.validate()
        self.blob.resolve(self.flow.d)      # range checks live in BlobFilterConfig
        return self

    def blob_filter(self) -> BlobFilterConfig:
        return self.blob.resolve(self.flow.d)

    def to_dict(self) -> dict:
        out = {}
        for section in fields(self):
            cfg = getattr(self, section.name)
            values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
            if section.name == "blob" and values["max_area"] is None:
                values["max_area"] = max_area_for_spacing(self.flow.d)
            out[section.name] = values
        return out


_SECTION_TYPES = {
    "enhancement": EnhancementConfig,
    "registration": RegistrationConfig,
    "flow": FlowConfig,
    "blob": BlobConfig,
    "output": OutputConfig,
}


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a PipelineConfig from parsed JSON; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    unknown = set(data) - set(_SECTION_TYPES)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTION_TYPES.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ValueError(f"config section {name!r} must be an object")
        allowed = {f.name for f in fields(cls)}
        bad = set(section) - allowed
        if bad:
            raise ValueError(f"unknown keys in config section {name!r}: {sorted(bad)}")
        kwargs[name] = cls(**section)
    return PipelineConfig(**kwargs).validate()


def load_config(path: str | Path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return config_from_dict(data)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# Frame loading
# --------------------------------------------------------------------------

class FrameSequence:
    """Lazily loaded, dimension-checked, lexicographically ordered frames."""

    def __init__(self, paths: Sequence[Path]):
        self.paths = list(paths)
        self._shape: tuple[int, int] | None = None

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self) -> Iterator[np.ndarray]:
        for path in self.paths:
            try:
                frame = read_image(path)
            except (ImageFormatError, OSError) as exc:
                raise InputError(f"{path}: {exc}") from exc
            if self._shape is None:
                self._shape = frame.shape
            elif frame.shape != self._shape:
                h, w = self._shape
                raise InputError(
                    f"{path}: frame is {frame.shape[1]}x{frame.shape[0]}, "
                    f"expected {w}x{h} like the first frame"
                )
            yield frame


def load_frames(directory: str | Path) -> FrameSequence:
    """Collect the PGM/PNG frames of a directory in lexicographic order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"input directory not found: {directory}")
    paths = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in (".pgm", ".png")
    )
    if len(paths) < 2:
        raise InputError(
            f"{directory}: need at least 2 frame files (PGM/PNG), found {len(paths)}"
        )
    return FrameSequence(paths)


# --------------------------------------------------------------------------
# Detection run
# --------------------------------------------------------------------------

def _flow_view(
    enhanced: np.ndarray, cfg: EnhancementConfig, frame_index: int
) -> np.ndarray:
    """The frame the flow tracker consumes: enhanced grayscale, or its Otsu
    binarization scaled back to [0, 255] when binarize_for_flow is set."""
    if not cfg.binarize_for_flow:
        return enhanced
    try:
        threshold = imgproc.otsu_threshold(enhanced)
    except imgproc.DegenerateFrameError:
        log.warning(
            "frame %d: constant enhanced frame, skipping binarization", frame_index
        )
        return enhanced
    return imgproc.binarize(enhanced, threshold).astype(np.float64) * 255.0


def _register_onto_prev(
    prev_enhanced: np.ndarray,
    cur_enhanced: np.ndarray,
    cur_view: np.ndarray,
    cfg: RegistrationConfig,
    frame_index: int,
) -> np.ndarray:
    """Warp the current flow view back onto the previous frame's geometry."""
    try:
        feats_prev = registration.detect_features(
            prev_enhanced, cfg.max_features, cfg.fast_threshold
        )
        feats_cur = registration.detect_features(
            cur_enhanced, cfg.max_features, cfg.fast_threshold
        )
        if len(feats_prev) < 2 or len(feats_cur) < 2:
            raise ValueError("not enough features")
        matches = registration.match_features(
            [d for _, d in feats_prev], [d for _, d in feats_cur]
        )
        matches = registration.filter_matches(matches, cfg.keep_fraction)
        pairs = [
            (
                (feats_prev[m.index_a][0].x, feats_prev[m.index_a][0].y),
                (feats_cur[m.index_b][0].x, feats_cur[m.index_b][0].y),
            )
            for m in matches
        ]
        h, w = prev_enhanced.shape
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
        transform = registration.estimate_transform(pairs, center)
    except ValueError as exc:
        log.warning("frame %d: registration skipped (%s)", frame_index, exc)
        return cur_view
    return registration.warp_frame(cur_view, transform.inverse())


def run_pipeline(
    frames: Iterable[np.ndarray],
    config: PipelineConfig,
    on_frame: Callable[[int, np.ndarray, list[Detection], list[Blob],
                        list[TrackedPoint]], None] | None = None,
) -> list[Detection]:
    """Run the full detector over a frame sequence.

    Frames are consumed as a stream (two enhanced frames plus the current
    raw frame live in memory at once).  Detections are emitted per frame
    index >= 1; the optional `on_frame` callback additionally receives the
    raw frame, its blobs, and the surviving tracked points.
    """
    config.validate()
    blob_filter = config.blob_filter()
    enh = config.enhancement
    state = FlowState()
    detections: list[Detection] = []
    prev_enhanced: np.ndarray | None = None
    prev_view: np.ndarray | None = None
    index = -1
    for index, raw in enumerate(frames):
        try:
            enhanced = imgproc.unsharp_mask(raw, enh.sigma, enh.contrast_gain)
            view = _flow_view(enhanced, enh, index)
            if prev_view is not None:
                cur_view = view
                if config.registration.enabled:
                    cur_view = _register_onto_prev(
                        prev_enhanced, enhanced, view, config.registration, index
                    )
                state, tracked = process_frame_flow(
                    state, prev_view, cur_view,
                    spacing_d=config.flow.d,
                    window_n=config.flow.n,
                    window_radius=config.flow.window_radius,
                    max_iterations=config.flow.max_iterations,
                    pyramid_levels=config.flow.pyramid_levels,
                    k1=config.flow.k1,
                    k2=config.flow.k2,
                    k3=config.flow.k3,
                    epsilon_v=config.flow.epsilon_v,
                )
                blobs = detect_blobs(raw, blob_filter)
                frame_dets = fuse(index, tracked, blobs)
                detections.extend(frame_dets)
                if on_frame is not None:
                    on_frame(index, raw, frame_dets, blobs, tracked)
        except InputError:
            raise
        except ValueError as exc:
            raise ValueError(f"frame {index}: {exc}") from exc
        prev_enhanced = enhanced
        prev_view = view
    if index < 1:
        raise InputError("pipeline needs at least 2 frames")
    return detections


def detection_record(det: Detection) -> dict:
    return {
        "frame": det.frame_index,
        "x": det.position[0],
        "y": det.position[1],
        "blob_area": det.blob.area,
        "circularity": det.blob.circularity,
        "motion_mag": det.motion_magnitude,
        "motion_angle_deg": math.degrees(det.motion_angle),
    }


def write_detections(path: str | Path, detections: Sequence[Detection]) -> None:
    """Serialize detections as JSONL, sorted by (frame, x, y)."""
    records = sorted(
        (detection_record(d) for d in detections),
        key=lambda r: (r["frame"], r["x"], r["y"]),
    )
    with open(path, "w", encoding="ascii") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


_DETECTION_KEYS = {
    "frame", "x", "y", "blob_area", "circularity", "motion_mag",
    "motion_angle_deg",
}


def load_detections(path: str | Path) -> list[dict]:
    """Read a detections.jsonl file back into validated records."""
    records = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read detections {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: invalid JSON") from exc
            if not isinstance(record, dict) or not _DETECTION_KEYS <= set(record):
                raise InputError(
                    f"{path}:{line_no}: detection record missing required keys"
                )
            records.append(record)
    return records


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------

@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    match_radius: float
    zero_detections: bool
    per_frame: list[dict]

    def to_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "match_radius": self.match_radius,
            "zero_detections": self.zero_detections,
            "per_frame": self.per_frame,
        }


def _detection_points(detections) -> dict[int, list[tuple[float, float]]]:
    by_frame: dict[int, list[tuple[float, float]]] = {}
    for det in detections:
        if isinstance(det, Detection):
            frame, x, y = det.frame_index, det.position[0], det.position[1]
        elif isinstance(det, dict):
            frame, x, y = int(det["frame"]), float(det["x"]), float(det["y"])
        else:
            frame, x, y = int(det[0]), float(det[1]), float(det[2])
        by_frame.setdefault(frame, []).append((x, y))
    return by_frame


def evaluate(
    detections,
    ground_truth: dict[int, list[tuple[int, float, float]]],
    match_radius: float,
) -> EvalReport:
    """Greedy nearest-first matching of detections to true target centers.

    Each truth matches at most one detection and vice versa; pairs beyond
    `match_radius` never match.  Candidate pairs are processed in
    (distance, x, y, target id) order, so the outcome is independent of
    detection input order.
    """
    if match_radius <= 0:
        raise ValueError(f"match radius must be > 0, got {match_radius}")
    by_frame = _detection_points(detections)
    stray = set(by_frame) - set(ground_truth)
    if stray:
        raise InputError(
            f"detections reference frames absent from ground truth: "
            f"{sorted(stray)[:5]}"
        )
    tp = fp = fn = 0
    per_frame = []
    zero_detections = sum(len(v) for v in by_frame.values()) == 0
    for frame in sorted(ground_truth):
        dets = by_frame.get(frame, [])
        truths = ground_truth[frame]
        candidates = []
        for dx, dy in dets:
            for tid, tx, ty in truths:
                dist = math.hypot(dx - tx, dy - ty)
                if dist <= match_radius:
                    candidates.append((dist, dx, dy, tid))
        candidates.sort()
        used_det: set[tuple[float, float]] = set()
        used_truth: set[int] = set()
        matched = 0
        for dist, dx, dy, tid in candidates:
            if (dx, dy) in used_det or tid in used_truth:
                continue
            used_det.add((dx, dy))
            used_truth.add(tid)
            matched += 1
        frame_fp = len(dets) - matched
        frame_fn = len(truths) - matched
        tp += matched
        fp += frame_fp
        fn += frame_fn
        per_frame.append(
            {"frame": frame, "tp": matched, "fp": frame_fp, "fn": frame_fn}
        )
    precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return EvalReport(
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        match_radius=match_radius,
        zero_detections=zero_detections,
        per_frame=per_frame,
    )


# --------------------------------------------------------------------------
# Annotation
# --------------------------------------------------------------------------

def _draw_block(frame: np.ndarray, x: int, y: int, half: int, value: float) -> None:
    h, w = frame.shape
    frame[max(y - half, 0):min(y + half + 1, h),
          max(x - half, 0):min(x + half + 1, w)] = value


def annotate(
    frame: np.ndarray,
    detections: Sequence[Detection] = (),
    blobs: Sequence[Blob] = (),
    tracked: Sequence[TrackedPoint] = (),
) -> np.ndarray:
    """Overlay markers: blob squares (200), tracked crosses and detection
    squares (255), all clipped at the frame borders."""
    out = np.asarray(frame, dtype=np.float64).copy()
    h, w = out.shape
    for blob in blobs:
        cx, cy = blob.centroid
        r = blob.radius_rn
        x0, x1 = int(round(cx - r)), int(round(cx + r))
        y0, y1 = int(round(cy - r)), int(round(cy + r))
        for x in range(max(x0, 0), min(x1 + 1, w)):
            if 0 <= y0 < h:
                out[y0, x] = 200.0
            if 0 <= y1 < h:
                out[y1, x] = 200.0
        for y in range(max(y0, 0), min(y1 + 1, h)):
            if 0 <= x0 < w:
                out[y, x0] = 200.0
            if 0 <= x1 < w:
                out[y, x1] = 200.0
    for point in tracked:
        x, y = int(round(point.position[0])), int(round(point.position[1]))
        for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            px, py = x + dx, y + dy
            if 0 <= px < w and 0 <= py < h:
                out[py, px] = 255.0
    for det in detections:
        x, y = int(round(det.position[0])), int(round(det.position[1]))
        _draw_block(out, x, y, 3, 255.0)
    return out
