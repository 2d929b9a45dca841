"""Feature scaling, K-Means, Ward agglomerative clustering and silhouette scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NoMaliciousPoints, SingleCluster, TooFewPoints

K_RANGE = (3, 26)
SILHOUETTE_SAMPLE = 20000
_ROW_BLOCK = 2048


def minmax_scale(vectors):
    """Map each column to [0, 1]; constant columns become 0.

    Returns ``(scaled, mins, maxs)``.
    """
    x = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("nothing to scale")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (x - lo) / safe, 0.0)
    return scaled, lo, hi


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    out = np.empty((x.shape[0], centroids.shape[0]))
    for s in range(0, x.shape[0], _ROW_BLOCK):
        diff = x[s : s + _ROW_BLOCK, None, :] - centroids[None, :, :]
        out[s : s + _ROW_BLOCK] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    seed: object
    n_iter: int = 0
    history: list = field(default_factory=list)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding (2 + log k candidates per step)."""
    n = x.shape[0]
    trials = 2 + int(math.log(k))
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    closest = _sq_dists(x, centers[:1])[:, 0]
    for c in range(1, k):
        pot = closest.sum()
        if pot <= 0:
            # every point coincides with a centre already; any choice is optimal
            centers[c] = x[int(rng.integers(n))]
            continue
        cand = np.searchsorted(np.cumsum(closest), rng.random(trials) * pot)
        cand = np.minimum(cand, n - 1)
        cand_d = np.minimum(closest[None, :], _sq_dists(x, x[cand]).T)
        best = int(np.argmin(cand_d.sum(axis=1)))
        centers[c] = x[cand[best]]
        closest = cand_d[best]
    return centers


def _repair_empty(x, labels, d2, k):
    """Give each empty cluster the point farthest from its centroid (taken from a cluster of size > 1)."""
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        own = d2[np.arange(x.shape[0]), labels]
        movable = counts[labels] > 1
        cand = np.where(movable, own, -1.0)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = c
        counts[c] = 1
    return labels


def kmeans(points, k: int, seed=42, max_iter: int = 300, tol: float = 1e-6) -> ClusterModel:
    """Lloyd's algorithm from a seeded k-means++ start.

    Stops when the relative inertia change drops below ``tol`` or assignments
    stop changing. ``history`` records the inertia after every centroid update
    and is checked to be non-increasing; an empty cluster takes the point
    farthest from its centroid.
    """
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = x.shape[0]
    if k < 1 or k > n:
        raise TooFewPoints(f"k={k} with {n} points")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(x, k, rng)
    labels = None
    history: list = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centroids)
        new = _repair_empty(x, np.argmin(d2, axis=1), d2, k)
        changed = labels is None or not np.array_equal(new, labels)
        labels = new
        centroids = np.array([x[labels == c].mean(axis=0) for c in range(k)])
        resid = x - centroids[labels]
        inertia = float(np.einsum("ij,ij->", resid, resid))
        if history and inertia > history[-1] * (1 + 1e-12):
            raise RuntimeError(f"inertia increased: {history[-1]} -> {inertia}")
        history.append(inertia)
        if not changed:
            break
        if len(history) > 1:
            prev = history[-2]
            if prev == 0 or (prev - inertia) / prev < tol:
                break
    final = history[-1]
    return ClusterModel(k, centroids, labels, final, seed, it, history)


def agglomerative(points, n_clusters: int) -> np.ndarray:
    """Ward-linkage bottom-up clustering cut at ``n_clusters``.

    Labels are renumbered by first appearance so the output is canonical.
    """
    from scipy.cluster.hierarchy import linkage

    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = x.shape[0]
    if n_clusters < 1 or n_clusters > n:
        raise TooFewPoints(f"{n_clusters} clusters requested from {n} points")
    if n == 1:
        return np.zeros(1, dtype=int)
    z = linkage(x, method="ward")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for step in range(n - n_clusters):
        a, b = int(z[step, 0]), int(z[step, 1])
        parent[find(a)] = n + step
        parent[find(b)] = n + step
    roots = [find(i) for i in range(n)]
    remap: dict = {}
    return np.array([remap.setdefault(r, len(remap)) for r in roots], dtype=int)


def silhouette(points, labels, sample_size: Optional[int] = SILHOUETTE_SAMPLE, seed: int = 0) -> float:
    """Mean silhouette with Euclidean distance; singleton clusters score 0.

    Above ``sample_size`` points the mean is taken over a seeded uniform
    subsample (distances still use that subsample only).
    """
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    lab = np.asarray(labels)
    if sample_size is not None and x.shape[0] > sample_size:
        idx = np.sort(np.random.default_rng(seed).choice(x.shape[0], sample_size, replace=False))
        x, lab = x[idx], lab[idx]
    uniq, lab = np.unique(lab, return_inverse=True)
    if uniq.size < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    n, k = x.shape[0], uniq.size
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    sizes = onehot.sum(axis=0)
    total = 0.0
    for s in range(0, n, _ROW_BLOCK):
        dist = cdist(x[s : s + _ROW_BLOCK], x)
        rows = np.arange(dist.shape[0])
        sums = dist @ onehot
        own = lab[s : s + _ROW_BLOCK]
        own_size = sizes[own]
        a = sums[rows, own] / np.maximum(own_size - 1, 1)
        other = sums / sizes
        other[rows, own] = np.inf
        b = other.min(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            sil = (b - a) / np.maximum(a, b)
        sil = np.where((own_size > 1) & (np.maximum(a, b) > 0), sil, 0.0)
        total += float(sil.sum())
    return total / n


@dataclass
class SweepResult:
    best: ClusterModel
    table: list  # (k, silhouette)


def sweep_k(points, k_range: Sequence[int] = K_RANGE, seed: int = 42, sample_size=SILHOUETTE_SAMPLE) -> SweepResult:
    """K-Means for every k in the inclusive range; best silhouette wins, smallest k on ties.

    Each k draws from its own stream seeded by (seed, k).
    """
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    lo, hi = k_range
    if x.shape[0] <= hi:
        raise TooFewPoints(f"{x.shape[0]} points for k up to {hi}")
    table = []
    best, best_score = None, -np.inf
    for k in range(lo, hi + 1):
        model = kmeans(x, k, seed=np.random.SeedSequence([seed, k]))
        score = silhouette(x, model.labels, sample_size, seed)
        table.append((k, score))
        if score > best_score:
            best, best_score = model, score
    return SweepResult(best, table)


def target_cluster(labels, malicious, rule: str = "most_malicious") -> int:
    """Cluster holding the most malicious points; ties go to the larger cluster, then the lower id.

    ``rule="largest"`` orders by cluster size first instead (among clusters
    with at least one malicious point).
    """
    lab = np.asarray(labels)
    mal = np.asarray(malicious, dtype=bool)
    if not mal.any():
        raise NoMaliciousPoints("no malicious point to anchor the target cluster")
    ids = np.unique(lab)
    best_key, best_id = None, None
    for c in ids:
        members = lab == c
        m, size = int((members & mal).sum()), int(members.sum())
        if m == 0:
            continue
        key = (m, size) if rule == "most_malicious" else (size, m)
        if rule not in ("most_malicious", "largest"):
            raise ValueError(f"unknown target rule {rule!r}")
        if best_key is None or key > best_key:
            best_key, best_id = key, int(c)
    return best_id
