import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainscope.clustering import agglomerative, kmeans, minmax_scale, silhouette, sweep_k, target_cluster
from chainscope.errors import NoMaliciousPoints, SingleCluster, TooFewPoints

import oracles

FOUR = np.array([[0, 0], [0, 1], [10, 10], [10, 11]], dtype=float)


def blobs(seed, n_per=30, spread=0.3):
    rng = np.random.default_rng(seed)
    centres = np.array([[0, 0], [20, 0], [0, 20]], dtype=float)
    pts = np.vstack([c + rng.normal(0, spread, (n_per, 2)) for c in centres])
    return pts, np.repeat(np.arange(3), n_per)


def test_minmax_examples():
    scaled, lo, hi = minmax_scale([[3.0, 1.0]])
    assert np.array_equal(scaled, [[0.0, 0.0]])
    scaled, _, _ = minmax_scale([[0.0], [5.0], [10.0]])
    assert scaled.ravel().tolist() == [0.0, 0.5, 1.0]
    again, _, _ = minmax_scale(scaled)
    assert np.array_equal(again, scaled)


def test_kmeans_four_points_matches_exhaustive_search():
    m = kmeans(FOUR, 2, seed=0)
    best, labels = oracles.best_partition(FOUR, 2)
    assert oracles.same_partition(m.labels, labels)
    assert m.inertia == pytest.approx(best)
    assert sorted(map(tuple, m.centroids)) == [(0.0, 0.5), (10.0, 10.5)]


def test_kmeans_k_equals_n_and_duplicates():
    m = kmeans(FOUR, 4, seed=3)
    assert sorted(np.bincount(m.labels).tolist()) == [1, 1, 1, 1] and m.inertia == 0.0
    m = kmeans(np.ones((5, 3)), 1)
    assert m.inertia == 0.0 and np.array_equal(m.centroids[0], np.ones(3))
    with pytest.raises(TooFewPoints):
        kmeans(FOUR, 5)


def test_kmeans_matches_exhaustive_on_small_sets():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pts = rng.normal(0, 0.5, size=(7, 2))
        pts[:3] += 8
        best, labels = oracles.best_partition(pts, 2)
        m = kmeans(pts, 2, seed=1)
        assert oracles.same_partition(m.labels, labels)
        assert m.inertia == pytest.approx(best, rel=1e-12)


def test_kmeans_inertia_non_increasing_and_deterministic():
    rng = np.random.default_rng(1)
    for s in range(30):
        pts = rng.normal(size=(int(rng.integers(10, 120)), int(rng.integers(1, 8))))
        k = int(rng.integers(1, 9))
        a = kmeans(pts, k, seed=s)
        assert all(y <= x * (1 + 1e-12) for x, y in zip(a.history, a.history[1:]))
        b = kmeans(pts, k, seed=s)
        assert a.labels.tobytes() == b.labels.tobytes() and a.centroids.tobytes() == b.centroids.tobytes()


def test_blobs_recovered():
    pts, truth = blobs(0)
    assert oracles.same_partition(kmeans(pts, 3, seed=42).labels, truth)


def test_agglomerative_examples():
    assert oracles.same_partition(agglomerative(FOUR, 2), [0, 0, 1, 1])
    assert sorted(agglomerative(FOUR, 4).tolist()) == [0, 1, 2, 3]
    assert agglomerative([[0.0], [1.0], [10.0]], 2).tolist() == [0, 0, 1]


def test_silhouette_examples():
    assert silhouette(FOUR, [0, 0, 1, 1]) == pytest.approx(0.9293, abs=5e-5)
    assert abs(silhouette(FOUR, [0, 0, 1, 1]) - oracles.silhouette_bruteforce(FOUR, [0, 0, 1, 1])) <= 1e-12
    interleaved = np.array([[0, 0], [5, 5], [0, 0], [5, 5]], dtype=float)
    assert silhouette(interleaved, [0, 0, 1, 1]) <= 0
    dup = np.array([[0, 0], [0, 0], [3, 3], [3, 3]], dtype=float)
    assert silhouette(dup, [0, 0, 1, 1]) == 1.0
    with pytest.raises(SingleCluster):
        silhouette(FOUR, [0, 0, 0, 0])


def test_silhouette_singletons_contribute_zero():
    pts = np.array([[0.0], [1.0], [9.0]])
    assert silhouette(pts, [0, 0, 1]) == pytest.approx(oracles.silhouette_bruteforce(pts, [0, 0, 1]), abs=1e-12)


def test_silhouette_subsample_is_seeded():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(300, 3))
    lab = (pts[:, 0] > 0).astype(int)
    a = silhouette(pts, lab, sample_size=100, seed=5)
    assert a == silhouette(pts, lab, sample_size=100, seed=5)
    sub = np.sort(np.random.default_rng(5).choice(300, 100, replace=False))
    assert a == pytest.approx(oracles.silhouette_bruteforce(pts[sub], lab[sub]), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_silhouette_in_range(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    lab = rng.integers(0, 3, n)
    if len(set(lab)) < 2:
        lab[0], lab[1] = 0, 1
    s = silhouette(rng.normal(size=(n, 2)), lab)
    assert -1.0 <= s <= 1.0


def test_sweep_picks_three_for_three_blobs():
    pts, _ = blobs(3, n_per=12)
    res = sweep_k(pts, (3, 8), seed=42)
    assert res.best.k == 3
    assert [k for k, _ in res.table] == list(range(3, 9))
    assert sweep_k(pts, (3, 8), seed=42).table == res.table


def test_default_sweep_table_has_24_rows():
    pts, _ = blobs(4, n_per=10)
    assert len(sweep_k(pts, seed=1).table) == 24


def test_sweep_needs_more_points_than_k():
    with pytest.raises(TooFewPoints):
        sweep_k(FOUR, (3, 4))


def test_target_cluster_rules():
    labels = np.array([0, 0, 0, 1, 1])
    assert target_cluster(labels, [1, 1, 1, 1, 0]) == 0
    labels = np.array([0] * 10 + [1] * 50)
    mal = np.zeros(60, bool)
    mal[[0, 1, 10, 11]] = True
    assert target_cluster(labels, mal) == 1
    assert target_cluster([1, 1, 0, 0], [1, 0, 1, 0]) == 0
    assert target_cluster([0, 0, 1, 1], [1, 1, 1, 0], rule="largest") == 0
    with pytest.raises(NoMaliciousPoints):
        target_cluster([0, 1], [0, 0])
