"""Confusion matrices, percentage metrics and ROC analysis for binary labels."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyConfusion, EmptyInput, LengthMismatch, SingleClass

METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1", "fpr", "fnr", "tpr")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """The same counts seen with the other class as positive."""
        return ConfusionMatrix(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)


@dataclass(frozen=True)
class MetricReport:
    """All values are percentages; ``undefined`` names metrics whose
    denominator was zero (reported as 0)."""

    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    fpr: float
    fnr: float
    tpr: float
    undefined: frozenset = field(default_factory=frozenset)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> list:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def confusion(actual, predicted, positive=1) -> ConfusionMatrix:
    actual = list(actual)
    predicted = list(predicted)
    if len(actual) != len(predicted):
        raise LengthMismatch(f"{len(actual)} actual vs {len(predicted)} predicted labels")
    if not actual:
        raise EmptyInput("no labels to compare")
    tp = tn = fp = fn = 0
    for a, p in zip(actual, predicted):
        if p == positive:
            if a == positive:
                tp += 1
            else:
                fp += 1
        elif a == positive:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _pct(num: float, den: float, name: str, undefined: set) -> float:
    if den == 0:
        undefined.add(name)
        return 0.0
    return 100.0 * num / den


def metric_report(cm: ConfusionMatrix) -> MetricReport:
    if cm.total <= 0:
        raise EmptyConfusion("confusion matrix holds no examples")
    undefined: set = set()
    accuracy = _pct(cm.tp + cm.tn, cm.total, "accuracy", undefined)
    precision = _pct(cm.tp, cm.tp + cm.fp, "precision", undefined)
    recall = _pct(cm.tp, cm.tp + cm.fn, "recall", undefined)
    specificity = _pct(cm.tn, cm.tn + cm.fp, "specificity", undefined)
    fpr = _pct(cm.fp, cm.fp + cm.tn, "fpr", undefined)
    fnr = _pct(cm.fn, cm.fn + cm.tp, "fnr", undefined)
    tpr = _pct(cm.tp, cm.tp + cm.fn, "tpr", undefined)
    if {"precision", "recall"} & undefined or precision + recall == 0:
        undefined.add("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricReport(accuracy, precision, recall, specificity, f1, fpr, fnr, tpr,
                        frozenset(undefined))


def roc_curve(scores, actual, positive=1) -> RocCurve:
    """ROC points from one threshold per distinct score, highest first.

    Tied scores enter together, so the curve takes a diagonal step across a
    tie and the trapezoid area counts tied pairs as one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    is_pos = np.array([a == positive for a in actual], dtype=bool)
    if scores.size != is_pos.size:
        raise LengthMismatch(f"{scores.size} scores vs {is_pos.size} labels")
    n_pos = int(is_pos.sum())
    n_neg = is_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = is_pos[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp_cum = np.cumsum(p)[last_of_group]
    fp_cum = np.cumsum(~p)[last_of_group]
    tpr = np.r_[0.0, tp_cum / n_pos]
    fpr = np.r_[0.0, fp_cum / n_neg]
    thresholds = np.r_[np.inf, s[last_of_group]]
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=trapezoid_auc(fpr, tpr))


def trapezoid_auc(fpr, tpr) -> float:
    fpr = np.asarray(fpr, dtype=np.float64)
    tpr = np.asarray(tpr, dtype=np.float64)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def pair_count_auc(scores, actual, positive=1) -> float:
    """Fraction of (positive, negative) pairs ranked correctly, ties as 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    is_pos = np.array([a == positive for a in actual], dtype=bool)
    pos = scores[is_pos]
    neg = scores[~is_pos]
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("AUC needs both classes present")
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (pos.size * neg.size))


def averaged_auc(per_class) -> tuple:
    """(micro, macro) AUC over one-vs-rest problems.

    ``per_class`` is a sequence of ``(scores, indicators)`` with indicators
    1 for membership in that class. Macro averages the per-class AUCs; micro
    pools every (score, indicator) pair into one curve.
    """
    aucs = []
    pooled_s, pooled_t = [], []
    for scores, ind in per_class:
        scores = np.asarray(scores, dtype=np.float64)
        ind = np.asarray(ind).astype(int)
        aucs.append(roc_curve(scores, ind, positive=1).auc)
        pooled_s.append(scores)
        pooled_t.append(ind)
    micro = roc_curve(np.concatenate(pooled_s), np.concatenate(pooled_t), positive=1).auc
    return micro, float(np.mean(aucs))


def binary_one_vs_rest(scores, actual, positive=1):
    """Two one-vs-rest problems from a probability-like positive score in [0, 1]."""
    scores = np.asarray(scores, dtype=np.float64)
    ind = np.array([a == positive for a in actual], dtype=int)
    return [(scores, ind), (1.0 - scores, 1 - ind)]


def format_confusion(cm: ConfusionMatrix, positive_name="infected", negative_name="fresh") -> str:
    width = max(len(positive_name), len(negative_name), 9)
    rows = [
        f"{'actual/predicted':<18}{negative_name:>{width}}{positive_name:>{width}}",
        f"{negative_name:<18}{cm.tn:>{width}}{cm.fp:>{width}}",
        f"{positive_name:<18}{cm.fn:>{width}}{cm.tp:>{width}}",
        f"tp={cm.tp} tn={cm.tn} fp={cm.fp} fn={cm.fn} (positive class: {positive_name})",
    ]
    return "\n".join(rows) + "\n"
