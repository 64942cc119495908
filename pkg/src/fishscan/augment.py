"""Geometric augmentation: flips, quarter-turn rotations, shifts and zoom."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetManifest, ManifestEntry
from .errors import BadParameter, DataError, IoFailure
from .raster import RgbImage, load_image, save_image
from .resize import resize_image

log = logging.getLogger(__name__)

OP_KINDS = ("fliph", "flipv", "rot", "trans", "zoom")


@dataclass(frozen=True)
class AugmentOp:
    kind: str
    degrees: int = 0
    dx: int = 0
    dy: int = 0
    factor: float = 1.0

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise BadParameter(f"unknown augmentation {self.kind!r}")
        if self.kind == "rot" and self.degrees not in (90, 180, 270):
            raise BadParameter(f"rotation must be 90, 180 or 270 degrees, got {self.degrees}")
        if self.kind == "zoom" and not 0.5 <= self.factor <= 2.0:
            raise BadParameter(f"zoom factor must lie in [0.5, 2], got {self.factor}")

    @property
    def tag(self) -> str:
        """Filename-safe identifier."""
        if self.kind == "rot":
            return f"rot{self.degrees}"
        if self.kind == "trans":
            return f"trans{self.dx}_{self.dy}"
        if self.kind == "zoom":
            return f"zoom{self.factor:g}"
        return self.kind


def parse_ops(text: str) -> list:
    """Parse ``"fliph,flipv,rot:90,trans:5:0,zoom:1.2"``."""
    ops = []
    for raw in text.split(","):
        raw = raw.strip()
        if not raw:
            continue
        name, *args = raw.split(":")
        try:
            if name in ("fliph", "flipv") and not args:
                ops.append(AugmentOp(name))
            elif name == "rot" and len(args) == 1:
                ops.append(AugmentOp("rot", degrees=int(args[0])))
            elif name == "trans" and len(args) == 2:
                ops.append(AugmentOp("trans", dx=int(args[0]), dy=int(args[1])))
            elif name == "zoom" and len(args) == 1:
                ops.append(AugmentOp("zoom", factor=float(args[0])))
            else:
                raise BadParameter(f"malformed augmentation {raw!r}")
        except ValueError as exc:
            raise BadParameter(f"malformed augmentation {raw!r}: {exc}") from exc
    return ops


def _shift(px: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = px.shape[:2]
    cols = np.clip(np.arange(w) - dx, 0, w - 1)
    rows = np.clip(np.arange(h) - dy, 0, h - 1)
    return px[rows][:, cols]


def _center_fit(px: np.ndarray, h: int, w: int) -> np.ndarray:
    """Center-crop or edge-pad ``px`` to h x w."""
    ph, pw = px.shape[:2]
    rows = np.clip(np.arange(h) + (ph - h) // 2, 0, ph - 1)
    cols = np.clip(np.arange(w) + (pw - w) // 2, 0, pw - 1)
    return px[rows][:, cols]


def apply_augment(image: RgbImage, op: AugmentOp) -> RgbImage:
    px = image.pixels
    if op.kind == "fliph":
        return RgbImage(px[:, ::-1])
    if op.kind == "flipv":
        return RgbImage(px[::-1])
    if op.kind == "rot":
        return RgbImage(np.rot90(px, k=op.degrees // 90))
    if op.kind == "trans":
        if abs(op.dx) >= image.width or abs(op.dy) >= image.height:
            raise BadParameter(f"shift ({op.dx}, {op.dy}) exceeds a {image.width}x{image.height} image")
        return RgbImage(_shift(px, op.dx, op.dy))
    new_w = max(2, int(round(image.width * op.factor)))
    new_h = max(2, int(round(image.height * op.factor)))
    scaled = resize_image(image, new_w, new_h)
    return RgbImage(_center_fit(scaled.pixels, image.height, image.width))


def expand_manifest(manifest: DatasetManifest, ops, out_dir, seed: int = 42,
                    variants: int | None = None, augment_test: bool = False) -> DatasetManifest:
    """Write augmented copies of training images under ``out_dir``.

    Each image receives every op, or, when ``variants`` is given, that many
    ops drawn without replacement by a seeded generator. The returned
    manifest lists all original entries (paths re-rooted at ``out_dir``)
    followed by the augmented ones, in input order. Unreadable images are
    listed but not augmented.
    """
    ops = list(ops)
    if not manifest.entries:
        raise BadParameter("manifest is empty")
    if not ops:
        raise BadParameter("no augmentation ops given")
    if variants is not None and not 1 <= variants <= len(ops):
        raise BadParameter(f"variants must lie in [1, {len(ops)}]")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"{out_dir}: {exc.strerror or exc}") from exc
    rng = np.random.default_rng(seed)

    originals = []
    added = []
    for entry in manifest.entries:
        src = manifest.resolve(entry)
        rel = Path(os.path.relpath(src.resolve(), out_dir.resolve())).as_posix()
        originals.append(ManifestEntry(rel, entry.label, entry.split))
        if entry.split != "train" and not augment_test:
            continue
        chosen = ops if variants is None else [ops[i] for i in sorted(
            rng.choice(len(ops), size=variants, replace=False))]
        try:
            image = load_image(src)
        except DataError as exc:
            # keep the original row so training reports it as a reject
            log.warning("not augmenting %s: %s", entry.path, exc)
            continue
        stem = Path(entry.path).with_suffix("")
        if stem.is_absolute() or ".." in stem.parts:
            stem = Path(stem.name)
        for op in chosen:
            name = f"{stem.as_posix()}__{op.tag}.png"
            target = out_dir / name
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise IoFailure(f"{target.parent}: {exc.strerror or exc}") from exc
            save_image(apply_augment(image, op), target)
            added.append(ManifestEntry(name, entry.label, entry.split))
    return DatasetManifest(originals + added, root=out_dir)
