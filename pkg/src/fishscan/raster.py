"""Raster containers, PNG/PPM codecs and grayscale conversion.

Pixels are stored as float64 arrays normalized to [0, 1]; quantization to
8 bits happens only when reading or writing files.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptFile, IoFailure, UnsupportedFormat

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RgbImage:
    """RGB raster of shape (height, width, 3) with channels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = _frozen(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("channel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel raster of shape (height, width), values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = _frozen(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected non-empty (H, W) pixels, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean region selector of shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise ValueError(f"expected (H, W) mask, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def count(self) -> int:
        return int(self.bits.sum())


def to_gray(image: RgbImage) -> GrayImage:
    """Rec. 601 luma of each pixel."""
    gray = image.pixels @ LUMA_WEIGHTS
    # weights sum to 1 but rounding can leave 1 + 2e-16 on white pixels
    return GrayImage(np.clip(gray, 0.0, 1.0))


def _read_ppm(path: Path, data: bytes) -> np.ndarray:
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens = []
    pos = 2
    token_re = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")
    for _ in range(3):
        match = token_re.match(data, pos)
        if match is None:
            raise CorruptFile(f"{path}: truncated PPM header")
        tokens.append(match.group(1))
        pos = match.end()
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise CorruptFile(f"{path}: truncated PPM header")
    pos += 1
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise CorruptFile(f"{path}: malformed PPM header") from exc
    if width < 1 or height < 1:
        raise CorruptFile(f"{path}: bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"{path}: only maxval 255 PPM is supported (got {maxval})")
    needed = width * height * 3
    raster = data[pos:pos + needed]
    if len(raster) < needed:
        raise CorruptFile(f"{path}: PPM raster truncated ({len(raster)} of {needed} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def load_image(path) -> RgbImage:
    """Decode a PNG or binary PPM (P6, maxval 255) file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
    if data[:2] == b"P6":
        raw = _read_ppm(path, data)
    elif data[:8] == _PNG_MAGIC:
        try:
            with Image.open(path) as im:
                raw = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
            raise CorruptFile(f"{path}: {exc}") from exc
    elif len(data) < 8 and (_PNG_MAGIC.startswith(data) or data.startswith(b"P")):
        raise CorruptFile(f"{path}: file too short")
    else:
        raise UnsupportedFormat(f"{path}: not a PNG or binary PPM (P6) file")
    return RgbImage(raw.astype(np.float64) / 255.0)


def quantize(pixels: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(pixels) * 255.0), 0, 255).astype(np.uint8)


def save_image(image: RgbImage, path) -> None:
    """Write ``image`` as PPM when the suffix is ``.ppm``, PNG otherwise."""
    path = Path(path)
    raw = quantize(image.pixels)
    try:
        if path.suffix.lower() == ".ppm":
            header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
            with open(path, "wb") as fh:
                fh.write(header)
                fh.write(raw.tobytes())
        else:
            Image.fromarray(raw).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc


def save_label_map(labels: np.ndarray, path) -> None:
    """Write a cluster-index grid as a palette PNG, one distinct color per label."""
    labels = np.asarray(labels)
    palette = [(40, 40, 40), (80, 160, 220), (230, 80, 60), (250, 220, 90),
               (120, 200, 120), (200, 120, 220), (240, 240, 240), (150, 100, 50)]
    flat = []
    for i in range(256):
        flat.extend(palette[i % len(palette)])
    grid = np.ascontiguousarray(labels, dtype=np.uint8)
    im = Image.frombytes("P", (grid.shape[1], grid.shape[0]), grid.tobytes())
    im.putpalette(flat)
    try:
        im.save(os.fspath(path), format="PNG")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
