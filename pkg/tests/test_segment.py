import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fishscan.colorspace import LabImage, rgb_image_to_lab
from fishscan.errors import BadK, BadParameter, TooFewPoints
from fishscan.raster import RgbImage
from fishscan.segment import (ClusterStats, kmeans, objective, segment_lab_image,
                              select_infected_cluster, squared_distances)


def best_two_partition(points):
    """Exhaustive minimum within-cluster sum of squares over all 2-partitions."""
    n = len(points)
    best = (np.inf, None)
    for bits in itertools.product((0, 1), repeat=n - 1):
        labels = np.array((0,) + bits)
        if labels.min() == labels.max():
            continue
        j = sum(((points[labels == c] - points[labels == c].mean(axis=0)) ** 2).sum()
                for c in (0, 1))
        if j < best[0]:
            best = (j, labels)
    return best


def same_partition(a, b):
    pairs = set(zip(np.asarray(a).tolist(), np.asarray(b).tolist()))
    return len(pairs) == len(set(np.asarray(a).tolist())) == len(set(np.asarray(b).tolist()))


def test_identical_points_single_cluster():
    res = kmeans(np.tile([[0.3, -2.0]], (6, 1)), 1)
    np.testing.assert_array_equal(res.centroids, [[0.3, -2.0]])
    assert res.objective == 0.0


def test_two_blobs_match_exhaustive_optimum():
    pts = np.array([[0, 0]] * 4 + [[10, 10]] * 4, dtype=float)
    j_opt, labels = best_two_partition(pts)
    assert j_opt == 0.0
    res = kmeans(pts, 2)
    assert res.objective == 0.0
    assert same_partition(res.assignments, labels)
    assert sorted(map(tuple, res.centroids)) == [(0.0, 0.0), (10.0, 10.0)]


def test_k_equals_distinct_count_gives_zero():
    pts = np.array([[0, 0], [1, 0], [0, 1], [5, 5], [0, 0], [5, 5]], dtype=float)
    assert kmeans(pts, 4, seed=3).objective == 0.0


def test_errors():
    with pytest.raises(BadK):
        kmeans(np.zeros((3, 2)), 0)
    with pytest.raises(TooFewPoints):
        kmeans(np.zeros((2, 2)), 3)
    with pytest.raises(BadParameter):
        kmeans(np.zeros((4, 2)), 2, max_iter=0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(5, 60), st.integers(1, 3))
def test_result_invariants(seed, k, n, d):
    pts = np.random.default_rng(seed).random((n, d))
    if n < k:
        return
    res = kmeans(pts, k, seed=seed)
    assert res.assignments.min() >= 0 and res.assignments.max() < k
    dist = squared_distances(pts, res.centroids)
    # nearest centroid, lowest index on ties
    np.testing.assert_array_equal(res.assignments, np.argmin(dist, axis=1))
    naive = sum(float(((p - res.centroids[a]) ** 2).sum()) for p, a in zip(pts, res.assignments))
    assert res.objective == pytest.approx(naive, rel=1e-9, abs=1e-15)
    h = np.array(res.history)
    assert np.all(h[1:] <= h[:-1] + 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_seed_determinism(seed):
    pts = np.random.default_rng(seed).normal(size=(80, 2))
    a, b = kmeans(pts, 3, seed=seed), kmeans(pts, 3, seed=seed)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignments, b.assignments)
    assert a.history == b.history


def test_post_convergence_consistency(rng):
    pts = rng.normal(size=(300, 2)) + rng.integers(0, 3, size=(300, 1)) * 8
    res = kmeans(pts, 3, tol=0.0, max_iter=500)
    np.testing.assert_array_equal(np.argmin(squared_distances(pts, res.centroids), axis=1),
                                  res.assignments)


def test_empty_cluster_is_reseeded():
    # two far points and k=3 with duplicates forces an empty cluster path
    pts = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0]] * 5 + [[100.0, 0.0]])
    res = kmeans(pts, 3, seed=0)
    assert np.bincount(res.assignments, minlength=3).min() >= 1
    assert res.objective == 0.0


def test_uniform_image_one_cluster():
    lab = rgb_image_to_lab(RgbImage(np.full((5, 6, 3), 0.4)))
    seg = segment_lab_image(lab, k=1)
    assert np.all(seg.label_map == 0)
    assert seg.mask.count == 30 and seg.infected_cluster == 0


def half_gray_half_red(h=8, w=12):
    px = np.full((h, w, 3), 0.5)
    px[:, w // 2:] = (0.9, 0.1, 0.1)
    return px


def test_gray_red_halves_split_pixel_exact():
    px = half_gray_half_red()
    lab = rgb_image_to_lab(RgbImage(px))
    seg = segment_lab_image(lab, k=2)
    left, right = seg.label_map[:, :6], seg.label_map[:, 6:]
    assert np.unique(left).size == 1 and np.unique(right).size == 1
    assert left[0, 0] != right[0, 0]
    # exhaustive oracle on a downsampled copy (every other pixel, one row)
    feats = lab.pixels[0, ::2, 1:]
    _, labels = best_two_partition(feats)
    assert same_partition(seg.label_map[0, ::2], labels)
    assert seg.infected_cluster == right[0, 0]


def test_white_lesion_gets_own_label_with_lightness():
    # gray body / red background / white lesion: white and gray share chroma,
    # so the lesion only separates once L* joins the features
    px = half_gray_half_red(16, 24)
    px[4:8, 2:6] = 1.0
    lab = rgb_image_to_lab(RgbImage(px))
    seg = segment_lab_image(lab, k=3, use_lightness=True)
    lesion = seg.label_map[4:8, 2:6]
    assert np.unique(lesion).size == 1
    others = {seg.label_map[0, 0], seg.label_map[0, 20]}
    assert lesion[0, 0] not in others and len(others) == 2


def test_selection_examples():
    assert select_infected_cluster([(-5, 40), (30, 60)]) == 1
    assert select_infected_cluster([(1, 1)]) == 0
    assert select_infected_cluster([(10, 80), (20, 50)]) == 0
    assert select_infected_cluster([(10, 0), (10, 0)]) == 0


def test_selection_skips_empty_clusters():
    stats = [ClusterStats(0, 100.0, 50.0, 0.0), ClusterStats(5, 10.0, 1.0, 0.0)]
    assert select_infected_cluster(stats) == 1


def test_segmentation_invariants(rng):
    px = rng.random((20, 30, 3))
    seg = segment_lab_image(rgb_image_to_lab(RgbImage(px)), k=4)
    assert sum(s.count for s in seg.cluster_stats) == 600
    np.testing.assert_array_equal(seg.mask.bits, seg.label_map == seg.infected_cluster)
    assert seg.label_map.shape == (20, 30)


def test_objective_helper():
    pts = np.array([[0.0], [2.0]])
    assert objective(pts, np.array([[1.0]]), np.array([0, 0])) == 2.0


def test_lab_image_shape_check():
    with pytest.raises(ValueError):
        LabImage(np.zeros((3, 3)))
