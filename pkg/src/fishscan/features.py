"""Statistical and gray-level co-occurrence features of the lesion region."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .colorspace import LabImage, rgb_image_to_lab
from .enhance import clahe, enhance_rgb
from .errors import (DegenerateGlcm, DegenerateRegion, EmptyMask, EmptyRegion, NoValidPairs,
                     RegionTooSmall, SegmentationEmpty)
from .raster import BinaryMask, GrayImage, RgbImage, to_gray
from .resize import resize_image
from .segment import SegmentationResult, segment_lab_image

log = logging.getLogger(__name__)

FEATURE_NAMES = ("mean", "std_dev", "variance", "kurtosis", "skewness",
                 "contrast", "correlation", "energy", "entropy", "homogeneity")

ANGLES = (0, 45, 90, 135)
MODE_BINS = 256


class StatFeatures(NamedTuple):
    mean: float
    std_dev: float
    variance: float
    kurtosis: float
    skewness: float


class GlcmFeatures(NamedTuple):
    contrast: float
    correlation: float
    energy: float
    entropy: float
    homogeneity: float


class FeatureVector(NamedTuple):
    mean: float
    std_dev: float
    variance: float
    kurtosis: float
    skewness: float
    contrast: float
    correlation: float
    energy: float
    entropy: float
    homogeneity: float

    @classmethod
    def from_parts(cls, stats: StatFeatures, texture: GlcmFeatures) -> "FeatureVector":
        return cls(*stats, *texture)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    distance: int
    angle: int
    matrix: np.ndarray


def mode_intensity(intensities) -> float:
    """Center of the most populated of 256 equal bins on [0, 1] (lowest bin wins ties)."""
    values = np.asarray(intensities, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyRegion("cannot take the mode of an empty region")
    idx = np.clip(np.floor(values * MODE_BINS).astype(np.int64), 0, MODE_BINS - 1)
    counts = np.bincount(idx, minlength=MODE_BINS)
    return (int(np.argmax(counts)) + 0.5) / MODE_BINS


def stat_features(intensities, strict: bool = False) -> StatFeatures:
    """Mean, population standard deviation and variance, excess kurtosis and
    Pearson mode skewness of the region intensities.

    For a constant region kurtosis and skewness are undefined. With
    ``strict`` that raises :class:`DegenerateRegion`; otherwise both are
    reported as 0 and a warning is logged.
    """
    x = np.asarray(intensities, dtype=np.float64).ravel()
    if x.size < 2:
        raise RegionTooSmall(f"need at least 2 pixels, got {x.size}")
    mu = x.mean()
    resid = x - mu
    # one compensation step: the residual mean absorbs the rounding of mu
    dev2 = (resid - resid.mean()) ** 2
    var = np.mean(dev2)
    # a spread so small that m2^2 underflows is as undefined as a constant one
    if x.min() == x.max() or var**2 == 0.0:
        if strict:
            raise DegenerateRegion("constant region: kurtosis and skewness are undefined")
        log.warning("constant region; kurtosis and skewness set to 0")
        return StatFeatures(float(mu), float(np.sqrt(var)), float(var), 0.0, 0.0)
    sigma = np.sqrt(var)
    # m4/m2^2 - 3 written as Var(dev^2)/m2^2 - 2: same value, but a
    # two-valued region lands on exactly -2 instead of -2 +- an ulp
    kurt = np.mean((dev2 - var) ** 2) / var**2 - 2.0
    skew = (mu - mode_intensity(x)) / sigma
    return StatFeatures(float(mu), float(sigma), float(sigma) ** 2, float(kurt), float(skew))


def angle_offset(distance: int, angle: int) -> tuple:
    """(row, column) displacement; 45 degrees points up and to the right."""
    offsets = {0: (0, distance), 45: (-distance, distance),
               90: (-distance, 0), 135: (-distance, -distance)}
    if angle not in offsets:
        raise ValueError(f"angle must be one of {ANGLES}, got {angle}")
    return offsets[angle]


def quantize_levels(values: np.ndarray, levels: int) -> np.ndarray:
    return np.clip(np.floor(np.asarray(values) * levels).astype(np.int64), 0, levels - 1)


def glcm_counts(image: GrayImage, mask: BinaryMask, levels: int, distance: int,
                angle: int) -> np.ndarray:
    """Unnormalized, unsymmetrized co-occurrence counts of in-mask pairs."""
    if levels < 2 or distance < 1:
        raise ValueError("levels must be >= 2 and distance >= 1")
    bits = mask.bits
    if bits.shape != image.pixels.shape:
        raise ValueError("mask and image dimensions differ")
    q = quantize_levels(image.pixels, levels)
    dr, dc = angle_offset(distance, angle)
    h, w = bits.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    if r0 >= r1 or c0 >= c1:
        return np.zeros((levels, levels))
    src = (slice(r0, r1), slice(c0, c1))
    dst = (slice(r0 + dr, r1 + dr), slice(c0 + dc, c1 + dc))
    both = bits[src] & bits[dst]
    pairs = q[src][both] * levels + q[dst][both]
    return np.bincount(pairs, minlength=levels * levels).reshape(levels, levels).astype(np.float64)


def compute_glcm(image: GrayImage, mask: BinaryMask, levels: int = 16, distance: int = 1,
                 angle: int = 0) -> Glcm:
    """Symmetrized, normalized co-occurrence matrix of the masked pixels."""
    if mask.count == 0:
        raise EmptyMask("mask selects no pixels")
    counts = glcm_counts(image, mask, levels, distance, angle)
    sym = counts + counts.T
    total = sym.sum()
    if total == 0:
        raise NoValidPairs(f"no in-mask pixel pairs at distance {distance}, angle {angle}")
    return Glcm(levels=levels, distance=distance, angle=angle, matrix=sym / total)


def average_glcm(image: GrayImage, mask: BinaryMask, levels: int = 16, distance: int = 1) -> Glcm:
    """Mean of the normalized matrices over the four standard angles.

    Angles without any valid pair are skipped; if none has pairs,
    :class:`NoValidPairs` is raised.
    """
    mats = []
    for angle in ANGLES:
        try:
            mats.append(compute_glcm(image, mask, levels, distance, angle).matrix)
        except NoValidPairs:
            continue
    if not mats:
        raise NoValidPairs(f"no in-mask pixel pairs at distance {distance} for any angle")
    return Glcm(levels=levels, distance=distance, angle=-1, matrix=np.mean(mats, axis=0))


def glcm_features(glcm: Glcm, strict: bool = False) -> GlcmFeatures:
    """Contrast, correlation, energy, entropy (natural log) and homogeneity.

    Correlation needs non-zero marginal spread; otherwise it raises
    :class:`DegenerateGlcm` under ``strict`` or is reported as 0.
    """
    m = np.asarray(glcm.matrix, dtype=np.float64)
    g = m.shape[0]
    i, j = np.indices((g, g), dtype=np.float64)
    diff2 = (i - j) ** 2
    contrast = float(np.sum(diff2 * m))
    energy = float(np.sum(m**2))
    nz = m[m > 0]
    entropy = float(-np.sum(nz * np.log(nz)))
    homogeneity = float(np.sum(m / (1.0 + diff2)))

    mu_a = np.sum(i * m)
    mu_b = np.sum(j * m)
    sd_a = np.sqrt(np.sum((i - mu_a) ** 2 * m))
    sd_b = np.sqrt(np.sum((j - mu_b) ** 2 * m))
    if sd_a == 0 or sd_b == 0:
        if strict:
            raise DegenerateGlcm("zero marginal spread: correlation undefined")
        log.warning("degenerate co-occurrence matrix; correlation set to 0")
        correlation = 0.0
    else:
        correlation = float((np.sum(i * j * m) - mu_a * mu_b) / (sd_a * sd_b))
    return GlcmFeatures(contrast, correlation, energy, entropy, homogeneity)


@dataclass(frozen=True, eq=False)
class PipelineStages:
    """Intermediate products of one pass through the preprocessing chain."""

    resized: RgbImage
    enhanced: RgbImage
    lab: LabImage
    intensity: GrayImage
    segmentation: SegmentationResult
    features: FeatureVector


def run_pipeline(rgb: RgbImage, config=None) -> PipelineStages:
    """Resize, enhance, convert to Lab, segment, then describe the lesion cluster."""
    from .config import PipelineConfig

    config = config or PipelineConfig()
    resized = resize_image(rgb, config.target_width, config.target_height,
                           config.resize_end_condition)
    white = config.white()
    if config.enhance_order == "before_lab":
        enhanced = enhance_rgb(resized, config.clahe_config())
        lab = rgb_image_to_lab(enhanced, white)
        intensity = to_gray(enhanced)
    elif config.enhance_order == "after_lab":
        enhanced = resized
        lab0 = rgb_image_to_lab(resized, white).pixels.copy()
        light = clahe(GrayImage(np.clip(lab0[:, :, 0] / 100.0, 0.0, 1.0)), config.clahe_config())
        lab0[:, :, 0] = 100.0 * light.pixels
        lab = LabImage(lab0)
        intensity = light
    else:
        enhanced = resized
        lab = rgb_image_to_lab(resized, white)
        intensity = to_gray(resized)

    seg = segment_lab_image(lab, k=config.segment_k, seed=config.seed,
                            use_lightness=config.segment_use_lightness,
                            max_iter=config.segment_max_iter, tol=config.segment_tol)
    if seg.mask.count < 2:
        raise SegmentationEmpty(f"lesion mask holds {seg.mask.count} pixel(s); need at least 2")
    stats = stat_features(intensity.pixels[seg.mask.bits])
    texture = glcm_features(average_glcm(intensity, seg.mask, config.glcm_levels,
                                         config.glcm_distance))
    return PipelineStages(resized=resized, enhanced=enhanced, lab=lab, intensity=intensity,
                          segmentation=seg, features=FeatureVector.from_parts(stats, texture))


def extract_feature_vector(rgb: RgbImage, config=None) -> FeatureVector:
    """The ten-element descriptor of ``rgb`` under ``config``."""
    return run_pipeline(rgb, config).features
