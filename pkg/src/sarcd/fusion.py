"""Fusion of tracked flow points with blobs (Phase 3).

A tracked point is confirmed as a change when it falls inside the
axis-aligned square of side 2*r_n centered on a blob's centroid.  Blobs
are scanned in label order and the first hit wins, so each tracked point
yields at most one detection per frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .blob import Blob
from .optical_flow import TrackedPoint


@dataclass(frozen=True)
class Detection:
    frame_index: int
    position: tuple[float, float]
    blob: Blob
    motion_magnitude: float
    motion_angle: float


def point_in_blob_square(point: Sequence[float], blob: Blob) -> bool:
    """Inclusive membership test against the blob's bounding square."""
    x, y = float(point[0]), float(point[1])
    cx, cy = blob.centroid
    r = blob.radius_rn
    return abs(x - cx) <= r and abs(y - cy) <= r


def fuse(
    frame_index: int,
    tracked: Sequence[TrackedPoint],
    blobs: Sequence[Blob],
) -> list[Detection]:
    """Confirm tracked points against blob squares, first match wins."""
    detections: list[Detection] = []
    for point in tracked:
        for blob in blobs:
            if point_in_blob_square(point.position, blob):
                detections.append(
                    Detection(
                        frame_index=frame_index,
                        position=(float(point.position[0]), float(point.position[1])),
                        blob=blob,
                        motion_magnitude=point.last_motion,
                        motion_angle=(
                            point.last_angle if point.last_angle is not None else 0.0
                        ),
                    )
                )
                break
    return detections
