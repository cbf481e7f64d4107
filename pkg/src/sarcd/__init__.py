"""Change detection for circular-SAR video.

The pipeline combines sparse Lucas-Kanade optical flow over a fixed point
grid with blob analysis on enhanced frames, fusing both into per-frame
change detections.  A synthetic speckled-video generator with ground truth
makes detection quality measurable without real sensor data.
"""

__version__ = "0.1.0"

from . import blob, fusion, imgproc, optical_flow, pipeline, registration, synth

__all__ = [
    "blob",
    "fusion",
    "imgproc",
    "optical_flow",
    "pipeline",
    "registration",
    "synth",
]
