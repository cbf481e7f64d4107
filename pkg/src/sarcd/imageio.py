"""Grayscale image file I/O: binary PGM (P5) and 8-bit grayscale PNG.

Both formats are decoded from scratch (the PNG path supports exactly the
subset the pipeline consumes: 8-bit grayscale, non-interlaced).  Frames are
returned as float64 arrays in [0, 255]; writing quantizes to 8 bits.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .imgproc import quantize_u8


class ImageFormatError(ValueError):
    """Raised when a file is not a supported grayscale image."""


def write_pgm(path: str | Path, frame: np.ndarray) -> None:
    """Write a frame as binary PGM (P5, maxval 255)."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ValueError(f"expected 2-D frame, got shape {frame.shape}")
    h, w = frame.shape
    data = quantize_u8(frame).tobytes()
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data)


def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c in b" \t\r\n":
            i += 1
        elif c == b"#":
            j = data.find(b"\n", i)
            i = len(data) if j < 0 else j + 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in b" \t\r\n":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5) file with maxval <= 255."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM (P5) file")
    tokens = _pgm_tokens(raw[2:])
    fields = []
    end = 0
    for tok, pos in tokens:
        fields.append(tok)
        end = pos
        if len(fields) == 3:
            break
    if len(fields) < 3:
        raise ImageFormatError(f"{path}: truncated PGM header")
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: malformed PGM header") from exc
    if w <= 0 or h <= 0:
        raise ImageFormatError(f"{path}: invalid PGM dimensions {w}x{h}")
    if not (0 < maxval <= 255):
        raise ImageFormatError(f"{path}: unsupported PGM maxval {maxval} (need 8-bit)")
    body = raw[2 + end + 1 :]           # single whitespace byte after maxval
    if len(body) < w * h:
        raise ImageFormatError(f"{path}: PGM pixel data truncated")
    pixels = np.frombuffer(body[: w * h], dtype=np.uint8)
    return pixels.reshape(h, w).astype(np.float64)


_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def read_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale, non-interlaced PNG."""
    raw = Path(path).read_bytes()
    if not raw.startswith(_PNG_SIGNATURE):
        raise ImageFormatError(f"{path}: not a PNG file")
    pos = len(_PNG_SIGNATURE)
    width = height = None
    idat = bytearray()
    while pos + 8 <= len(raw):
        length, ctype = struct.unpack(">I4s", raw[pos : pos + 8])
        chunk = raw[pos + 8 : pos + 8 + length]
        pos += 12 + length                  # length + type + data + crc
        if ctype == b"IHDR":
            width, height, depth, color, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", chunk
            )
            if depth != 8 or color != 0:
                raise ImageFormatError(
                    f"{path}: unsupported PNG (need 8-bit grayscale, "
                    f"got depth {depth}, color type {color})"
                )
            if comp != 0 or filt != 0 or interlace != 0:
                raise ImageFormatError(f"{path}: unsupported PNG encoding options")
        elif ctype == b"IDAT":
            idat.extend(chunk)
        elif ctype == b"IEND":
            break
    if width is None or not idat:
        raise ImageFormatError(f"{path}: PNG missing IHDR or IDAT")
    try:
        stream = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise ImageFormatError(f"{path}: corrupt PNG data ({exc})") from exc
    stride = width + 1
    if len(stream) < stride * height:
        raise ImageFormatError(f"{path}: PNG pixel data truncated")
    out = np.empty((height, width), dtype=np.uint8)
    prev = np.zeros(width, dtype=np.int32)
    for row in range(height):
        line = stream[row * stride : (row + 1) * stride]
        ftype = line[0]
        cur = np.frombuffer(line[1:], dtype=np.uint8).astype(np.int32)
        if ftype == 0:
            pass
        elif ftype == 1:                    # Sub
            for i in range(1, width):
                cur[i] = (cur[i] + cur[i - 1]) & 0xFF
        elif ftype == 2:                    # Up
            cur = (cur + prev) & 0xFF
        elif ftype == 3:                    # Average
            cur[0] = (cur[0] + prev[0] // 2) & 0xFF
            for i in range(1, width):
                cur[i] = (cur[i] + (cur[i - 1] + prev[i]) // 2) & 0xFF
        elif ftype == 4:                    # Paeth
            cur[0] = (cur[0] + prev[0]) & 0xFF
            for i in range(1, width):
                a, b, c = cur[i - 1], prev[i], prev[i - 1]
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                cur[i] = (cur[i] + pred) & 0xFF
        else:
            raise ImageFormatError(f"{path}: unknown PNG filter type {ftype}")
        out[row] = cur.astype(np.uint8)
        prev = cur
    return out.astype(np.float64)


def read_image(path: str | Path) -> np.ndarray:
    """Read a grayscale image, dispatching on file extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    raise ImageFormatError(f"{path}: unsupported image extension {suffix!r}")
