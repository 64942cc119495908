"""Report figures: confusion heatmaps, ROC curves and a classifier comparison chart.

Everything renders through the non-interactive Agg backend straight to PNG.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import IoFailure  # noqa: E402
from .metrics import ConfusionMatrix, RocCurve  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
# no software/version stamp, so identical inputs give identical files
PNG_METADATA = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)
    return path


def plot_confusion(cm: ConfusionMatrix, path, title="Confusion matrix",
                   positive_name="infected", negative_name="fresh") -> Path:
    grid = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.2))
        ax.imshow(grid, cmap="Blues", vmin=0, vmax=max(int(grid.max()), 1))
        half = grid.max() / 2.0
        for r in range(2):
            for c in range(2):
                ax.text(c, r, str(grid[r, c]), ha="center", va="center",
                        color="white" if grid[r, c] > half else "black")
        names = [negative_name, positive_name]
        ax.set_xticks([0, 1], names)
        ax.set_yticks([0, 1], names)
        ax.set_xlabel("Predicted")
        ax.set_ylabel("Actual")
        ax.set_title(title)
        fig.tight_layout()
    return _save(fig, path)


def plot_roc(curves: dict, path, title="ROC") -> Path:
    """``curves`` maps a legend name to a :class:`RocCurve`."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.8))
        ax.plot([0, 1], [0, 1], color="0.7", lw=0.8, ls="--")
        for name, roc in curves.items():
            ax.plot(roc.fpr, roc.tpr, lw=1.4, label=f"{name} (AUC {roc.auc:.3f})")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
    return _save(fig, path)


def plot_comparison(rows: dict, path, metrics=("accuracy", "precision", "recall", "f1"),
                    title="Classifier comparison") -> Path:
    """Grouped bars; ``rows`` maps classifier name to a dict of percentages."""
    names = list(rows)
    x = np.arange(len(metrics))
    width = 0.8 / max(len(names), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.6, 3.8))
        for i, name in enumerate(names):
            vals = [rows[name][m] for m in metrics]
            ax.bar(x + (i - (len(names) - 1) / 2) * width, vals, width, label=name)
        ax.set_xticks(x, metrics)
        ax.set_ylim(0, 105)
        ax.set_ylabel("Percent")
        ax.set_title(title)
        ax.legend(frameon=False, ncols=min(len(names), 4), loc="upper center",
                  bbox_to_anchor=(0.5, -0.12))
        fig.tight_layout()
    return _save(fig, path)


def plot_roc_single(roc: RocCurve, path, title="ROC") -> Path:
    return plot_roc({"model": roc}, path, title)
