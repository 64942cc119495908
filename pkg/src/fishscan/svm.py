"""Soft-margin support vector machine trained on the dual by SMO.

The solver maximizes

    Q(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)

subject to sum_i alpha_i y_i = 0 and 0 <= alpha_i <= C, updating two
multipliers at a time. The working pair is the maximal violating pair of
the KKT conditions (Keerthi et al.); when that pair cannot move (flat
curvature with both ends blocked) a partner is drawn at random from a seeded
generator.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (BadParameter, DimensionMismatch, EmptyDataset, ModelVersionMismatch,
                     SingleClass)

log = logging.getLogger(__name__)

MODEL_VERSION = 1
LABEL_MAP = {"1": "infected", "-1": "fresh"}
KERNELS = ("linear", "polynomial", "gaussian", "sigmoid")


@dataclass(frozen=True, eq=False)
class Scaler:
    means: np.ndarray
    std_devs: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std_devs == 0

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.means.size:
            raise DimensionMismatch(f"expected {self.means.size} features, got {x.shape[-1]}")
        safe = np.where(self.constant, 1.0, self.std_devs)
        return np.where(self.constant, 0.0, (x - self.means) / safe)

    def inverse(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std_devs + self.means

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "std_devs": self.std_devs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.array(d["means"], dtype=np.float64), np.array(d["std_devs"], dtype=np.float64))


def fit_scaler(X) -> Scaler:
    """Per-column z-score parameters (population standard deviation)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise EmptyDataset("cannot fit a scaler on zero rows")
    means = X.mean(axis=0)
    std = X.std(axis=0)
    # a column of identical values can still show ~1e-17 spread after the mean
    std = np.where(np.ptp(X, axis=0) == 0, 0.0, std)
    return Scaler(means, std)


def apply_scaler(scaler: Scaler, x) -> np.ndarray:
    return scaler.transform(x)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    degree: int = 3
    gamma: float = 0.1
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise BadParameter(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 1:
            raise BadParameter("polynomial degree must be >= 1")
        if self.kind in ("polynomial", "gaussian", "sigmoid") and not self.gamma > 0:
            raise BadParameter("gamma must be positive")

    def matrix(self, A, B) -> np.ndarray:
        """Gram matrix K[i, j] = K(A[i], B[j])."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch(f"dimensions differ: {A.shape[1]} vs {B.shape[1]}")
        if self.kind == "gaussian":
            sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        dot = A @ B.T
        if self.kind == "linear":
            return dot
        if self.kind == "polynomial":
            return (self.gamma * dot + self.coef0) ** self.degree
        return np.tanh(self.gamma * dot + self.coef0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree, "gamma": self.gamma, "coef0": self.coef0}


def kernel_eval(spec: KernelSpec, x1, x2) -> float:
    x1 = np.asarray(x1, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x1.size != x2.size:
        raise DimensionMismatch(f"dimensions differ: {x1.size} vs {x2.size}")
    return float(spec.matrix(x1[None, :], x2[None, :])[0, 0])


def dual_objective(alphas, X, y, kernel: KernelSpec = KernelSpec()) -> float:
    alphas = np.asarray(alphas, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if not alphas.size == y.size == X.shape[0]:
        raise DimensionMismatch("alphas, X and y must have matching lengths")
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ kernel.matrix(X, X) @ ay)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Trained classifier. Support data live in the scaled feature space."""

    alphas: np.ndarray
    support_vectors: np.ndarray
    support_labels: np.ndarray
    bias: float
    weights: np.ndarray | None
    c_param: float
    kernel: KernelSpec
    scaler: Scaler
    converged: bool = True
    iterations: int = 0
    label_map: dict = field(default_factory=lambda: dict(LABEL_MAP))

    kind = "svm"

    def decision_values(self, X) -> np.ndarray:
        Z = self.scaler.transform(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if self.kernel.kind == "linear":
            return Z @ self.weights + self.bias
        if self.alphas.size == 0:
            return np.full(Z.shape[0], self.bias)
        K = self.kernel.matrix(Z, self.support_vectors)
        return K @ (self.alphas * self.support_labels) + self.bias

    def scores(self, X) -> np.ndarray:
        return self.decision_values(X)

    def predict_labels(self, X) -> np.ndarray:
        return np.where(self.decision_values(X) >= 0.0, 1, -1)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "kind": self.kind,
            "kernel": self.kernel.to_dict(),
            "c_param": self.c_param,
            "scaler": self.scaler.to_dict(),
            "weights": None if self.weights is None else self.weights.tolist(),
            "bias": self.bias,
            "support_vectors": self.support_vectors.tolist(),
            "alphas": self.alphas.tolist(),
            "support_labels": self.support_labels.astype(int).tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "label_map": self.label_map,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        check_version(d)
        n_features = len(d["scaler"]["means"])
        sv = np.array(d["support_vectors"], dtype=np.float64).reshape(-1, n_features)
        return cls(
            alphas=np.array(d["alphas"], dtype=np.float64),
            support_vectors=sv,
            support_labels=np.array(d["support_labels"], dtype=np.float64),
            bias=float(d["bias"]),
            weights=None if d["weights"] is None else np.array(d["weights"], dtype=np.float64),
            c_param=float(d["c_param"]),
            kernel=KernelSpec(**d["kernel"]),
            scaler=Scaler.from_dict(d["scaler"]),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            label_map=dict(d["label_map"]),
        )


def check_version(d: dict) -> None:
    if d.get("version") != MODEL_VERSION:
        raise ModelVersionMismatch(
            f"model version {d.get('version')!r} is not supported (expected {MODEL_VERSION})")


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.scaler.means.size:
        raise DimensionMismatch(f"expected a {model.scaler.means.size}-vector")
    return float(model.decision_values(x[None, :])[0])


def predict(model: SvmModel, x) -> int:
    """+1 (infected) when the decision value is >= 0, else -1 (fresh)."""
    return 1 if decision_value(model, x) >= 0.0 else -1


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    converged: bool
    iterations: int
    objective_trace: list


def smo_solve(K: np.ndarray, y: np.ndarray, c_param: float, tol: float = 1e-3,
              max_iter: int = 100000, seed: int = 42, trace: bool = False) -> SmoResult:
    """Maximize the dual for a precomputed Gram matrix ``K``."""
    n = y.size
    rng = np.random.default_rng(seed)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    # gradient of the minimization form f(a) = 1/2 a'Qa - sum(a)
    grad = -np.ones(n)
    objective_trace = [0.0] if trace else []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up = ((y > 0) & (alpha < c_param)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c_param))
        score = -y * grad
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        if score[i] - score[j] <= tol:
            converged = True
            break
        step = _pair_step(Q, alpha, y, grad, i, j, c_param)
        if step == 0.0:
            # blocked pair: look for any partner that still yields progress
            for cand in rng.permutation(np.flatnonzero(low)):
                if score[i] - score[cand] > 0:
                    step = _pair_step(Q, alpha, y, grad, i, int(cand), c_param)
                    if step > 0.0:
                        j = int(cand)
                        break
            if step == 0.0:
                converged = False
                break
        di, dj = y[i] * step, -y[j] * step
        alpha[i] = _snap(alpha[i] + di, c_param)
        alpha[j] = _snap(alpha[j] + dj, c_param)
        grad += Q[:, i] * di + Q[:, j] * dj
        if trace:
            objective_trace.append(float(alpha.sum() - 0.5 * alpha @ Q @ alpha))
    else:
        it = max_iter

    bias = _bias(alpha, y, grad, c_param)
    return SmoResult(alphas=alpha, bias=bias, converged=converged, iterations=it,
                     objective_trace=objective_trace)


def _snap(a: float, c_param: float) -> float:
    if a < 1e-12 * c_param:
        return 0.0
    if a > c_param * (1 - 1e-12):
        return c_param
    return a


def _pair_step(Q, alpha, y, grad, i, j, c_param) -> float:
    """Optimal step t >= 0 along alpha_i += y_i t, alpha_j -= y_j t."""
    # upper limits keeping both multipliers inside the box
    lim_i = c_param - alpha[i] if y[i] > 0 else alpha[i]
    lim_j = alpha[j] if y[j] > 0 else c_param - alpha[j]
    t_max = min(lim_i, lim_j)
    if t_max <= 0:
        return 0.0
    slope = -y[i] * grad[i] + y[j] * grad[j]
    if slope <= 0:
        return 0.0
    curvature = Q[i, i] + Q[j, j] - 2 * y[i] * y[j] * Q[i, j]
    if curvature > 1e-12:
        return float(min(slope / curvature, t_max))
    return float(t_max)


def _bias(alpha, y, grad, c_param) -> float:
    score = -y * grad
    free = (alpha > 0) & (alpha < c_param)
    if free.any():
        return float(score[free].mean())
    up = ((y > 0) & (alpha < c_param)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c_param))
    hi = score[up].max() if up.any() else None
    lo = score[low].min() if low.any() else None
    if hi is None:
        return float(lo)
    if lo is None:
        return float(hi)
    return float((hi + lo) / 2.0)


def train_svm(X, y, c_param: float = 1.0, kernel: KernelSpec = KernelSpec(), tol: float = 1e-3,
              max_passes: int = 200, seed: int = 42, scale: bool = True) -> SvmModel:
    """Fit a binary SVM on rows of ``X`` with labels in {-1, +1}.

    ``max_passes`` bounds the work at ``max_passes * n`` pair updates; if the
    budget runs out the best iterate is returned with ``converged=False``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise EmptyDataset("no training rows")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise BadParameter("labels must be -1 or +1")
    if not ((y > 0).any() and (y < 0).any()):
        raise SingleClass("training data must contain both labels")
    if not c_param > 0:
        raise BadParameter("C must be positive")

    if scale:
        scaler = fit_scaler(X)
    else:
        scaler = Scaler(np.zeros(X.shape[1]), np.ones(X.shape[1]))
    Z = scaler.transform(X)
    K = kernel.matrix(Z, Z)
    result = smo_solve(K, y, c_param, tol=tol, max_iter=max(1, max_passes) * X.shape[0], seed=seed)
    if not result.converged:
        log.warning("SMO stopped before reaching tolerance %g after %d updates",
                    tol, result.iterations)
    support = result.alphas > 0
    alphas = result.alphas[support]
    sv = Z[support]
    sy = y[support]
    weights = (alphas * sy) @ sv if kernel.kind == "linear" else None
    if weights is not None and not support.any():
        weights = np.zeros(X.shape[1])
    return SvmModel(alphas=alphas, support_vectors=sv, support_labels=sy, bias=result.bias,
                    weights=weights, c_param=float(c_param), kernel=kernel, scaler=scaler,
                    converged=result.converged, iterations=result.iterations)


def model_to_json(model) -> str:
    """Deterministic text form; floats keep full binary64 round-trip precision."""
    return json.dumps(model.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def model_from_json(text: str):
    d = json.loads(text)
    check_version(d)
    if d.get("kind") == "svm":
        return SvmModel.from_dict(d)
    from .baselines import BaselineModel
    return BaselineModel.from_dict(d)
