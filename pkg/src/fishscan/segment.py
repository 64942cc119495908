"""k-means clustering of Lab pixels and selection of the lesion cluster."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .colorspace import LabImage
from .errors import BadK, BadParameter, TooFewPoints
from .raster import BinaryMask


@dataclass(frozen=True, eq=False)
class KmeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    objective: float
    iterations: int
    history: tuple = field(default=())


def _column_distances(cols: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(k, n) squared distances from coordinate columns of shape (d, n)."""
    out = np.zeros((centroids.shape[0], cols.shape[1]))
    for c, centre in enumerate(centroids):
        for col, v in zip(cols, centre):
            out[c] += (col - v) ** 2
    return out


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) matrix of squared Euclidean distances."""
    cols = np.ascontiguousarray(np.asarray(points, dtype=np.float64).T)
    return _column_distances(cols, np.asarray(centroids, dtype=np.float64)).T


def objective(points, centroids, assignments) -> float:
    """Within-cluster sum of squares."""
    diff = np.asarray(points) - np.asarray(centroids)[np.asarray(assignments)]
    return float(np.einsum("nd,nd->", diff, diff))


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    closest = np.einsum("nd,nd->n", points - centroids[0], points - centroids[0])
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centroids[c] = points[idx]
        d = points - centroids[c]
        closest = np.minimum(closest, np.einsum("nd,nd->n", d, d))
    return centroids


def kmeans(points, k: int, seed: int = 42, max_iter: int = 100, tol: float = 1e-6) -> KmeansResult:
    """Lloyd iterations from a k-means++ start.

    Stops when no point changes cluster, when no centroid moves more than
    ``tol``, or after ``max_iter`` rounds. A cluster that empties is reseeded
    at the point lying farthest from its own centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if k < 1:
        raise BadK(f"k must be at least 1, got {k}")
    if points.shape[0] < k:
        raise TooFewPoints(f"{points.shape[0]} points cannot form {k} clusters")
    if max_iter < 1 or tol < 0:
        raise BadParameter("max_iter must be >= 1 and tol >= 0")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(points, k, rng)
    cols = np.ascontiguousarray(points.T)
    assignments = None
    history = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dist = _column_distances(cols, centroids)
        new_assign = np.argmin(dist, axis=0)
        history.append(float(dist.min(axis=0).sum()))
        if assignments is not None and np.array_equal(new_assign, assignments):
            break
        assignments = new_assign

        counts = np.bincount(assignments, minlength=k)
        sums = np.stack([np.bincount(assignments, weights=col, minlength=k)
                         for col in cols], axis=1)
        new_centroids = centroids.copy()
        filled = counts > 0
        new_centroids[filled] = sums[filled] / counts[filled, None]
        if not filled.all():
            own = np.einsum("nd,nd->n", points - new_centroids[assignments],
                            points - new_centroids[assignments])
            for c in np.flatnonzero(~filled):
                far = int(np.argmax(own))
                new_centroids[c] = points[far]
                own[far] = -1.0
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            dist = _column_distances(cols, centroids)
            assignments = np.argmin(dist, axis=0)
            history.append(float(dist.min(axis=0).sum()))
            break

    final = objective(points, centroids, assignments)
    return KmeansResult(centroids=centroids, assignments=assignments, objective=final,
                        iterations=iterations, history=tuple(history))


@dataclass(frozen=True)
class ClusterStats:
    count: int
    mean_l: float
    mean_a: float
    mean_b: float

    @property
    def score(self) -> float:
        return self.mean_a + self.mean_l / 2.0


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    label_map: np.ndarray
    cluster_stats: tuple
    infected_cluster: int
    mask: BinaryMask


def select_infected_cluster(stats) -> int:
    """Index of the non-empty cluster with the largest a* + L*/2.

    Accepts :class:`ClusterStats` or plain ``(a, L)`` pairs.
    """
    best, best_score = 0, -np.inf
    for i, s in enumerate(stats):
        if isinstance(s, ClusterStats):
            if s.count == 0:
                continue
            score = s.score
        else:
            a, l = s
            score = a + l / 2.0
        if score > best_score:
            best, best_score = i, score
    return best


def segment_lab_image(image: LabImage, k: int = 3, seed: int = 42, use_lightness: bool = False,
                      max_iter: int = 100, tol: float = 1e-6) -> SegmentationResult:
    """Cluster pixels on chroma (a*, b*), optionally with L*, and mask the lesion cluster."""
    lab = image.pixels.reshape(-1, 3)
    features = lab if use_lightness else lab[:, 1:]
    result = kmeans(features, k, seed=seed, max_iter=max_iter, tol=tol)
    labels = result.assignments
    counts = np.bincount(labels, minlength=k)
    stats = []
    for c in range(k):
        if counts[c]:
            mean = lab[labels == c].mean(axis=0)
            stats.append(ClusterStats(int(counts[c]), *(float(v) for v in mean)))
        else:
            stats.append(ClusterStats(0, 0.0, 0.0, 0.0))
    infected = select_infected_cluster(stats)
    label_map = labels.reshape(image.height, image.width)
    return SegmentationResult(label_map=label_map, cluster_stats=tuple(stats),
                              infected_cluster=infected, mask=BinaryMask(label_map == infected))
