"""Contrast-limited adaptive histogram equalization with a Rayleigh target.

Each tile's clipped histogram CDF ``q`` is pushed through

    p = p_min + sqrt(2 * alpha**2 * ln(1 / (1 - q)))

and pixels are blended bilinearly between the four nearest tile mappings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadAlpha, BadParameter, TileTooSmall
from .raster import GrayImage, RgbImage, to_gray

Q_EPS = 1e-6


@dataclass(frozen=True)
class ClaheConfig:
    clip_limit: float = 0.01
    alpha: float = 0.04
    tiles_x: int = 8
    tiles_y: int = 8
    bins: int = 256

    def __post_init__(self):
        if not 0.0 < self.clip_limit <= 1.0:
            raise BadParameter(f"clip_limit must be in (0, 1], got {self.clip_limit}")
        if not self.alpha > 0.0:
            raise BadAlpha(f"alpha must be positive, got {self.alpha}")
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise BadParameter("tile grid must be at least 1x1")
        if self.bins < 2:
            raise BadParameter("need at least 2 histogram bins")


def rayleigh_transfer(q, p_min, alpha: float):
    """Map cumulative probability ``q`` onto a Rayleigh-shaped output.

    ``q`` is clamped to [0, 1 - 1e-6] so q = 1 stays finite. Works on scalars
    and arrays alike.
    """
    if not alpha > 0.0:
        raise BadAlpha(f"alpha must be positive, got {alpha}")
    q = np.clip(q, 0.0, 1.0 - Q_EPS)
    out = p_min + np.sqrt(2.0 * alpha * alpha * np.log(1.0 / (1.0 - q)))
    return float(out) if np.ndim(out) == 0 else out


def tile_edges(length: int, tiles: int) -> np.ndarray:
    """Boundaries of ``tiles`` near-equal, mirror-symmetric segments."""
    edges = np.floor(np.arange(tiles + 1) * length / tiles + 0.5).astype(np.int64)
    # rounding half up is not mirror-symmetric, so reflect the left half
    right = np.arange(tiles // 2 + 1, tiles + 1)
    edges[right] = length - edges[tiles - right]
    return edges


def clip_histogram(hist: np.ndarray, limit: float) -> np.ndarray:
    """Clip bins at ``limit`` and spread the excess evenly over all bins."""
    hist = np.asarray(hist, dtype=np.float64)
    excess = np.maximum(hist - limit, 0.0).sum()
    return np.minimum(hist, limit) + excess / hist.size


def tile_mapping(values: np.ndarray, config: ClaheConfig) -> np.ndarray:
    """Lookup table (one entry per bin) for the pixels of a single tile."""
    idx = bin_index(values, config.bins)
    hist = np.bincount(idx.ravel(), minlength=config.bins)
    clipped = clip_histogram(hist, config.clip_limit * values.size)
    cdf = np.cumsum(clipped) / clipped.sum()
    return rayleigh_transfer(cdf, float(values.min()), config.alpha)


def bin_index(values: np.ndarray, bins: int) -> np.ndarray:
    return np.minimum((np.asarray(values) * bins).astype(np.int64), bins - 1)


def _blend_weights(length: int, edges: np.ndarray):
    """Per-coordinate lower tile index and weight of the upper tile."""
    centers = (edges[:-1] + edges[1:] - 1) / 2.0
    pos = np.arange(length, dtype=np.float64)
    tiles = centers.size
    if tiles == 1:
        zeros = np.zeros(length, dtype=np.int64)
        return zeros, zeros, np.zeros(length)
    lo = np.clip(np.searchsorted(centers, pos, side="right") - 1, 0, tiles - 2)
    hi = lo + 1
    w = np.clip((pos - centers[lo]) / (centers[hi] - centers[lo]), 0.0, 1.0)
    return lo, hi, w


def clahe(image: GrayImage, config: ClaheConfig = ClaheConfig()) -> GrayImage:
    """Enhance ``image`` tile by tile; result is rescaled to span [0, 1]."""
    px = image.pixels
    height, width = px.shape
    if height < config.tiles_y or width < config.tiles_x:
        raise TileTooSmall(
            f"{width}x{height} image cannot hold a {config.tiles_x}x{config.tiles_y} tile grid")
    ey = tile_edges(height, config.tiles_y)
    ex = tile_edges(width, config.tiles_x)
    luts = np.empty((config.tiles_y, config.tiles_x, config.bins))
    for ty in range(config.tiles_y):
        for tx in range(config.tiles_x):
            tile = px[ey[ty]:ey[ty + 1], ex[tx]:ex[tx + 1]]
            luts[ty, tx] = tile_mapping(tile, config)

    idx = bin_index(px, config.bins)
    y_lo, y_hi, wy = _blend_weights(height, ey)
    x_lo, x_hi, wx = _blend_weights(width, ex)
    wy = wy[:, None]
    wx = wx[None, :]

    def lookup(ty, tx):
        return luts[ty[:, None], tx[None, :], idx]

    top = (1 - wx) * lookup(y_lo, x_lo) + wx * lookup(y_lo, x_hi)
    bottom = (1 - wx) * lookup(y_hi, x_lo) + wx * lookup(y_hi, x_hi)
    out = (1 - wy) * top + wy * bottom

    lo, hi = out.min(), out.max()
    if hi - lo <= 1e-12:
        # flat input: every tile maps its single occupied bin to one level
        return GrayImage(np.full_like(out, np.clip(lo, 0.0, 1.0)))
    return GrayImage(np.clip((out - lo) / (hi - lo), 0.0, 1.0))


def enhance_rgb(image: RgbImage, config: ClaheConfig = ClaheConfig()) -> RgbImage:
    """Equalize the luma of an RGB image and rescale channels to match it.

    Channel ratios (hue) are kept; channels saturating at 1 are clipped.
    """
    gray = to_gray(image).pixels
    enhanced = clahe(GrayImage(gray), config).pixels
    ratio = enhanced / np.maximum(gray, 1e-6)
    rgb = image.pixels * ratio[:, :, None]
    # black pixels carry no hue; lift them to neutral gray instead
    dark = gray < 1e-6
    rgb[dark] = enhanced[dark][:, None]
    return RgbImage(np.clip(rgb, 0.0, 1.0))
