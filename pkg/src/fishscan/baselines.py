"""Comparison classifiers: CART decision tree, logistic regression, Gaussian naive Bayes.

All three share the SVM's contract: labels in {-1, +1}, z-scored inputs,
and a score in [0, 1] for the positive (infected) class.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, DimensionMismatch, EmptyDataset, SingleClass
from .svm import LABEL_MAP, MODEL_VERSION, Scaler, check_version, fit_scaler

log = logging.getLogger(__name__)

BASELINE_KINDS = ("decision_tree", "logistic_regression", "naive_bayes")


@dataclass
class BaselineConfig:
    max_depth: int = 5
    min_samples_split: int = 2
    learning_rate: float = 0.1
    epochs: int = 2000
    var_floor: float = 1e-9


# ---------------------------------------------------------------- tree


def gini(pos: float, total: float) -> float:
    if total == 0:
        return 0.0
    p = pos / total
    return 2.0 * p * (1.0 - p)


def best_split(X: np.ndarray, t: np.ndarray):
    """(feature, threshold, weighted impurity) of the best axis-aligned split.

    ``t`` holds 0/1 targets. Thresholds are midpoints between consecutive
    distinct values; returns None when no split separates anything.
    """
    n, d = X.shape
    best = None
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ts = t[order]
        pos_left = np.cumsum(ts)[:-1]
        n_left = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        pos_total = ts.sum()
        p_l = pos_left / n_left
        n_right = n - n_left
        p_r = (pos_total - pos_left) / n_right
        impurity = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
        impurity = np.where(valid, impurity, np.inf)
        k = int(np.argmin(impurity))
        if best is None or impurity[k] < best[2] - 1e-15:
            best = (f, float((xs[k] + xs[k + 1]) / 2.0), float(impurity[k]))
    return best


def grow_tree(X, t, depth, max_depth, min_samples_split) -> dict:
    pos = float(t.sum())
    node = {"n": int(t.size), "pos": pos}
    if depth >= max_depth or t.size < min_samples_split or pos in (0.0, float(t.size)):
        return node
    split = best_split(X, t)
    if split is None or split[2] >= gini(pos, t.size) - 1e-15:
        return node
    f, thr, _ = split
    left = X[:, f] <= thr
    node["feature"] = f
    node["threshold"] = thr
    node["left"] = grow_tree(X[left], t[left], depth + 1, max_depth, min_samples_split)
    node["right"] = grow_tree(X[~left], t[~left], depth + 1, max_depth, min_samples_split)
    return node


def tree_depth(node: dict) -> int:
    if "feature" not in node:
        return 0
    return 1 + max(tree_depth(node["left"]), tree_depth(node["right"]))


def tree_score(node: dict, z: np.ndarray) -> float:
    while "feature" in node:
        node = node["left"] if z[node["feature"]] <= node["threshold"] else node["right"]
    return node["pos"] / node["n"]


# ---------------------------------------------------------------- logistic


def sigmoid(v):
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log_loss(w, b, Z, t) -> float:
    v = Z @ w + b
    # log(1 + exp(v)) - t v, computed without overflow
    return float(np.mean(np.logaddexp(0.0, v) - t * v))


def fit_logistic(Z, t, learning_rate, epochs):
    w = np.zeros(Z.shape[1])
    b = 0.0
    losses = [log_loss(w, b, Z, t)]
    for _ in range(epochs):
        err = sigmoid(Z @ w + b) - t
        w = w - learning_rate * (Z.T @ err) / t.size
        b = b - learning_rate * float(err.mean())
        losses.append(log_loss(w, b, Z, t))
    return w, b, losses


# ---------------------------------------------------------------- naive Bayes


def fit_naive_bayes(Z, t, var_floor):
    params = {}
    for cls in (0, 1):
        rows = Z[t == cls]
        params[cls] = {
            "prior": rows.shape[0] / Z.shape[0],
            "means": rows.mean(axis=0),
            "vars": np.maximum(rows.var(axis=0), var_floor),
        }
    return params


def nb_log_joint(params, cls, Z) -> np.ndarray:
    p = params[cls]
    ll = -0.5 * (np.log(2 * np.pi * p["vars"]) + (Z - p["means"]) ** 2 / p["vars"])
    return np.log(p["prior"]) + ll.sum(axis=1)


# ---------------------------------------------------------------- model


@dataclass(frozen=True, eq=False)
class BaselineModel:
    kind: str
    params: dict
    scaler: Scaler
    label_map: dict = field(default_factory=lambda: dict(LABEL_MAP))
    history: tuple = ()

    def scores(self, X) -> np.ndarray:
        """Positive-class score in [0, 1] per row."""
        Z = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if self.kind == "decision_tree":
            return np.array([tree_score(self.params["tree"], z) for z in Z])
        if self.kind == "logistic_regression":
            return sigmoid(Z @ self.params["weights"] + self.params["bias"])
        joint0 = nb_log_joint(self.params, 0, Z)
        joint1 = nb_log_joint(self.params, 1, Z)
        return sigmoid(joint1 - joint0)

    def predict_labels(self, X) -> np.ndarray:
        return np.where(self.scores(X) >= 0.5, 1, -1)

    def to_dict(self) -> dict:
        if self.kind == "naive_bayes":
            params = {str(c): {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                               for k, v in p.items()} for c, p in self.params.items()}
        elif self.kind == "logistic_regression":
            params = {"weights": self.params["weights"].tolist(), "bias": self.params["bias"]}
        else:
            params = self.params
        return {"version": MODEL_VERSION, "kind": self.kind, "params": params,
                "scaler": self.scaler.to_dict(), "label_map": self.label_map}

    @classmethod
    def from_dict(cls, d: dict) -> "BaselineModel":
        check_version(d)
        kind = d["kind"]
        raw = d["params"]
        if kind == "naive_bayes":
            params = {int(c): {"prior": float(p["prior"]), "means": np.array(p["means"]),
                               "vars": np.array(p["vars"])} for c, p in raw.items()}
        elif kind == "logistic_regression":
            params = {"weights": np.array(raw["weights"], dtype=np.float64),
                      "bias": float(raw["bias"])}
        elif kind == "decision_tree":
            params = raw
        else:
            raise BadParameter(f"unknown model kind {kind!r}")
        return cls(kind=kind, params=params, scaler=Scaler.from_dict(d["scaler"]),
                   label_map=dict(d["label_map"]))


def train_baseline(kind: str, X, y, config: BaselineConfig | None = None) -> BaselineModel:
    config = config or BaselineConfig()
    if kind not in BASELINE_KINDS:
        raise BadParameter(f"kind must be one of {BASELINE_KINDS}, got {kind!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    if X.shape[0] == 0:
        raise EmptyDataset("no training rows")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} labels")
    t = (y > 0).astype(np.float64)
    if t.min() == t.max():
        raise SingleClass("training data must contain both labels")
    scaler = fit_scaler(X)
    Z = scaler.transform(X)
    history = ()
    if kind == "decision_tree":
        params = {"tree": grow_tree(Z, t, 0, config.max_depth, config.min_samples_split)}
    elif kind == "logistic_regression":
        w, b, losses = fit_logistic(Z, t, config.learning_rate, config.epochs)
        params = {"weights": w, "bias": b}
        history = tuple(losses)
    else:
        params = fit_naive_bayes(Z, t, config.var_floor)
    return BaselineModel(kind=kind, params=params, scaler=scaler, history=history)


def predict_baseline(model: BaselineModel, x):
    """(label, score) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.scaler.means.size:
        raise DimensionMismatch(f"expected a {model.scaler.means.size}-vector")
    score = float(model.scores(x[None, :])[0])
    return (1 if score >= 0.5 else -1), score
