"""Dataset manifests (CSV: path,label,split) and stratified splitting."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadParameter, DataError, EmptyClass, IoFailure, MissingLabelDir

LABELS = ("fresh", "infected")
SPLITS = ("train", "test")
IMAGE_SUFFIXES = {".png", ".ppm"}
LABEL_SIGN = {"infected": 1, "fresh": -1}


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered entries; relative paths resolve against ``root``."""

    entries: tuple
    root: Path = Path(".")

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if e.label not in LABELS:
                raise DataError(f"unknown label {e.label!r} for {e.path}")
            if e.split not in SPLITS:
                raise DataError(f"unknown split {e.split!r} for {e.path}")
            if e.path in seen:
                raise DataError(f"duplicate manifest path {e.path}")
            seen.add(e.path)

    def split(self, name: str) -> list:
        return [e for e in self.entries if e.split == name]

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def counts(self) -> dict:
        out = {(lab, sp): 0 for lab in LABELS for sp in SPLITS}
        for e in self.entries:
            out[(e.label, e.split)] += 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["path", "label", "split"])
        for e in self.entries:
            writer.writerow([e.path, e.label, e.split])
        return buf.getvalue()

    def write(self, path) -> None:
        try:
            Path(path).write_text(self.to_csv())
        except OSError as exc:
            raise IoFailure(f"{path}: {exc.strerror or exc}") from exc

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["path", "label", "split"]:
            raise DataError(f"{path}: manifest header must be path,label,split")
        entries = [ManifestEntry(r["path"], r["label"].strip(), r["split"].strip()) for r in reader]
        return cls(entries, root=path.parent)


def list_images(directory: Path) -> list:
    return sorted(p.name for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def stratified_split(image_dir, ratio: float = 0.868, seed: int = 42,
                     test_counts: dict | None = None) -> DatasetManifest:
    """Shuffle each label folder with a seeded generator and send
    round(ratio * count) images to training, the rest to testing.

    ``test_counts`` (label -> number of test images) overrides the ratio
    per label. Paths in the manifest are relative to ``image_dir``.
    """
    image_dir = Path(image_dir)
    if not 0.0 < ratio <= 1.0:
        raise BadParameter(f"ratio must lie in (0, 1], got {ratio}")
    test_counts = dict(test_counts or {})
    if set(test_counts) - set(LABELS):
        raise BadParameter(f"test_counts keys must be among {LABELS}")
    missing = [str(image_dir / label) for label in LABELS if not (image_dir / label).is_dir()]
    if missing:
        raise MissingLabelDir(f"missing label directory: {', '.join(missing)}")
    rng = np.random.default_rng(seed)
    entries = []
    for label in LABELS:
        folder = image_dir / label
        names = list_images(folder)
        if not names:
            raise EmptyClass(f"{folder}: no images")
        order = rng.permutation(len(names))
        if label in test_counts:
            n_train = len(names) - int(test_counts[label])
        else:
            n_train = int(np.floor(ratio * len(names) + 0.5))
        if n_train < 1 or n_train >= len(names):
            raise EmptyClass(
                f"ratio {ratio} leaves an empty train or test split for {label} ({len(names)} images)")
        for rank, idx in enumerate(order):
            split = "train" if rank < n_train else "test"
            entries.append(ManifestEntry(f"{label}/{names[idx]}", label, split))
    return DatasetManifest(entries, root=image_dir)
