"""RGB -> XYZ -> L*a*b* conversion.

RGB is fed to the XYZ matrix as-is (no gamma linearization). The default
reference white is the XYZ image of RGB (1, 1, 1), i.e. the matrix row sums,
so pure white lands exactly on L* = 100, a* = b* = 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BadParameter
from .raster import RgbImage

RGB_TO_XYZ = np.array([
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
])

LAB_THRESHOLD = 0.008856
KAPPA = 903.3
SLOPE = 7.787
OFFSET = 16.0 / 116.0


class XyzColor(NamedTuple):
    x: float
    y: float
    z: float


class LabColor(NamedTuple):
    l: float
    a: float
    b: float


@dataclass(frozen=True)
class WhitePoint:
    xn: float
    yn: float
    zn: float

    def __post_init__(self):
        if min(self.xn, self.yn, self.zn) <= 0:
            raise BadParameter("white point components must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.xn, self.yn, self.zn])


DEFAULT_WHITE = WhitePoint(*RGB_TO_XYZ.sum(axis=1))


@dataclass(frozen=True, eq=False)
class LabImage:
    """Per-pixel L*, a*, b* stacked in an array of shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixels, got shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def lab_f(t):
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > LAB_THRESHOLD, np.cbrt(t), SLOPE * t + OFFSET)


def lightness(y_ratio):
    y_ratio = np.asarray(y_ratio, dtype=np.float64)
    return np.where(y_ratio > LAB_THRESHOLD, 116.0 * np.cbrt(y_ratio) - 16.0, KAPPA * y_ratio)


def rgb_array_to_xyz(rgb: np.ndarray) -> np.ndarray:
    """Apply the RGB->XYZ matrix along the last axis."""
    return np.asarray(rgb, dtype=np.float64) @ RGB_TO_XYZ.T


def xyz_array_to_lab(xyz: np.ndarray, white: WhitePoint = DEFAULT_WHITE) -> np.ndarray:
    ratios = np.asarray(xyz, dtype=np.float64) / white.as_array()
    fx, fy, fz = (lab_f(ratios[..., c]) for c in range(3))
    out = np.empty(ratios.shape)
    out[..., 0] = lightness(ratios[..., 1])
    out[..., 1] = 500.0 * (fx - fy)
    out[..., 2] = 200.0 * (fy - fz)
    return out


def rgb_to_xyz(rgb) -> XyzColor:
    return XyzColor(*(float(v) for v in rgb_array_to_xyz(np.asarray(rgb))))


def xyz_to_lab(xyz, white: WhitePoint = DEFAULT_WHITE) -> LabColor:
    return LabColor(*(float(v) for v in xyz_array_to_lab(np.asarray(xyz), white)))


def rgb_image_to_lab(image: RgbImage, white: WhitePoint = DEFAULT_WHITE) -> LabImage:
    return LabImage(xyz_array_to_lab(rgb_array_to_xyz(image.pixels), white))
