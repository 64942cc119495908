"""Synthetic fish images for end-to-end checks.

A gray-silver elliptical body with luminance texture sits on a dark,
nearly neutral background; infected fish additionally carry one to three reddish or pale
pink lesion blobs inside the body.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import LABELS
from .raster import RgbImage, save_image

BACKGROUND = np.array([0.18, 0.19, 0.21])
BODY = np.array([0.58, 0.60, 0.63])
LESION_COLORS = (np.array([0.80, 0.30, 0.28]), np.array([0.93, 0.68, 0.66]))


def fish_image(rng: np.random.Generator, infected: bool, width: int = 160,
               height: int = 80, return_lesion: bool = False):
    """One synthetic fish; optionally also the boolean lesion mask."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    px = np.empty((height, width, 3))
    px[:] = BACKGROUND
    px += rng.normal(0.0, 0.01, size=(height, width, 1))

    cx = width / 2 + rng.uniform(-0.05, 0.05) * width
    cy = height / 2 + rng.uniform(-0.05, 0.05) * height
    ax = rng.uniform(0.32, 0.42) * width
    ay = rng.uniform(0.28, 0.36) * height
    body = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0

    shade = rng.uniform(0.9, 1.1)
    freq = rng.uniform(0.15, 0.35)
    stripes = 0.04 * np.sin(freq * xx + rng.uniform(0, 2 * np.pi)) * np.cos(0.5 * freq * yy)
    texture = stripes + rng.normal(0.0, 0.035, size=(height, width))
    body_px = BODY * shade + texture[:, :, None]
    px[body] = body_px[body]

    lesion = np.zeros((height, width), dtype=bool)
    if infected:
        for _ in range(rng.integers(1, 4)):
            # keep the blob centre well inside the body ellipse
            r = rng.uniform(0.0, 0.55)
            t = rng.uniform(0, 2 * np.pi)
            bx = cx + r * ax * np.cos(t)
            by = cy + r * ay * np.sin(t)
            rad = rng.uniform(0.06, 0.10) * width
            rad_y = rad * rng.uniform(0.6, 1.0)
            blob = (((xx - bx) / rad) ** 2 + ((yy - by) / rad_y) ** 2 <= 1.0) & body
            color = LESION_COLORS[rng.integers(len(LESION_COLORS))]
            noise = rng.normal(0.0, 0.03, size=(height, width, 1))
            px[blob] = (color + noise)[blob]
            lesion |= blob
    image = RgbImage(np.clip(px, 0.0, 1.0))
    return (image, lesion) if return_lesion else image


def write_dataset(out_dir, n_images: int = 300, infected_fraction: float = 0.5, seed: int = 7,
                  width: int = 160, height: int = 80) -> dict:
    """Write ``fresh/`` and ``infected/`` folders of PNGs; returns per-label counts."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    n_infected = int(round(n_images * infected_fraction))
    counts = {label: 0 for label in LABELS}
    for label in LABELS:
        (out_dir / label).mkdir(parents=True, exist_ok=True)
    for i in range(n_images):
        infected = i < n_infected
        label = "infected" if infected else "fresh"
        image = fish_image(rng, infected, width, height)
        save_image(image, out_dir / label / f"{label}_{counts[label]:04d}.png")
        counts[label] += 1
    return counts
