"""Per-frame enhancement and binarization primitives.

Frames are 2-D float64 numpy arrays with intensities in [0, 255]; binary
frames are 2-D uint8 arrays of {0, 1}.  Pixels stay at floating precision
through the whole enhancement chain and are quantized to 8 bits only for
histogram construction and file output, so rounding does not accumulate
across the four-step sharpening chain.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import convolve1d

MIN_FRAME_DIM = 16


class DegenerateFrameError(ValueError):
    """Raised when an operation has no meaningful result on the input frame
    (e.g. thresholding a constant frame)."""


def check_frame(frame: np.ndarray) -> np.ndarray:
    """Validate the frame convention: 2-D, >= 16x16, finite, in [0, 255].

    Returns the frame as float64 (converting if needed).
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {frame.shape}")
    h, w = frame.shape
    if h < MIN_FRAME_DIM or w < MIN_FRAME_DIM:
        raise ValueError(
            f"frame must be at least {MIN_FRAME_DIM}x{MIN_FRAME_DIM}, got {w}x{h}"
        )
    if not np.isfinite(frame).all():
        raise ValueError("frame contains non-finite values")
    if frame.min() < 0.0 or frame.max() > 255.0:
        raise ValueError("frame intensities must lie in [0, 255]")
    return frame


def quantize_u8(frame: np.ndarray) -> np.ndarray:
    """Quantize a float frame to uint8 (round-to-nearest, clipped)."""
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian weights with radius ceil(3*sigma), normalized to sum 1."""
    if not (isinstance(sigma, (int, float)) and math.isfinite(sigma)) or sigma <= 0:
        raise ValueError(f"sigma must be a positive finite real, got {sigma!r}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(frame: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge-clamp borders.

    Kernel radius is ceil(3*sigma) and the weights sum to 1, so constant
    frames pass through unchanged and output values stay inside the input
    min/max range.
    """
    frame = check_frame(frame)
    w = gaussian_kernel(sigma)
    # mode="nearest" replicates the edge pixel, avoiding dark halos at borders
    out = convolve1d(frame, w, axis=0, mode="nearest")
    out = convolve1d(out, w, axis=1, mode="nearest")
    return np.clip(out, 0.0, 255.0)


def adjust_contrast(frame: np.ndarray, gain: float) -> np.ndarray:
    """Linear contrast stretch pivoting around mid-gray 128.

    out = clamp(128 + gain*(in - 128)); gain=1 is the identity.
    """
    frame = check_frame(frame)
    if not (isinstance(gain, (int, float)) and math.isfinite(gain)) or gain < 1.0:
        raise ValueError(f"contrast gain must be >= 1, got {gain!r}")
    return np.clip(128.0 + gain * (frame - 128.0), 0.0, 255.0)


def unsharp_mask(frame: np.ndarray, sigma: float, contrast_gain: float) -> np.ndarray:
    """Sharpen by blending a high-contrast copy where the blur mask is strong.

    (a) blur the frame, (b) mask = |frame - blurred| normalized to [0, 1],
    (c) build a high-contrast copy, (d) per pixel blend: mask 1 selects the
    high-contrast value, mask 0 keeps the original, in between a weighted
    average of both.
    """
    frame = check_frame(frame)
    blurred = gaussian_blur(frame, sigma)
    lum = np.clip(np.abs(frame - blurred) / 255.0, 0.0, 1.0)
    high = adjust_contrast(frame, contrast_gain)
    return np.clip(lum * high + (1.0 - lum) * frame, 0.0, 255.0)


def otsu_threshold(frame: np.ndarray) -> int:
    """Threshold maximizing between-class variance on the 256-bin histogram.

    Classes split as {<= t} background vs {> t} foreground, matching
    :func:`binarize`'s strict inequality.  Ties break toward the smallest
    threshold.  Raises :class:`DegenerateFrameError` when the quantized
    frame holds a single intensity level.
    """
    frame = check_frame(frame)
    hist = np.bincount(quantize_u8(frame).ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateFrameError("constant frame has no separating threshold")
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)                    # pixels with level <= t
    m0 = np.cumsum(hist * levels)           # intensity mass with level <= t
    w1 = total - w0
    mu_total = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mean0 = m0 / w0
        mean1 = (mu_total - m0) / w1
        var_between = w0 * w1 * (mean0 - mean1) ** 2
    var_between = np.nan_to_num(var_between, nan=0.0)
    return int(np.argmax(var_between))      # argmax returns the first maximum


def binarize(frame: np.ndarray, threshold: float) -> np.ndarray:
    """Binary frame with bit 1 where intensity is strictly above threshold."""
    frame = check_frame(frame)
    if not (0.0 <= threshold <= 255.0):
        raise ValueError(f"threshold must be in [0, 255], got {threshold!r}")
    return (frame > threshold).astype(np.uint8)


def histogram_equalize(frame: np.ndarray) -> np.ndarray:
    """Standard CDF remapping over the 256-bin histogram.

    out = round(255 * (cdf(v) - cdf_min) / (N - cdf_min)).  Constant frames
    map to themselves (the remap is undefined, so they pass through).
    """
    frame = check_frame(frame)
    q = quantize_u8(frame)
    hist = np.bincount(q.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    nonzero = np.nonzero(hist)[0]
    if nonzero.size < 2:
        return frame.copy()
    cdf_min = cdf[nonzero[0]]
    total = q.size
    lut = np.rint(255.0 * (cdf - cdf_min) / (total - cdf_min))
    return np.clip(lut[q], 0.0, 255.0)
