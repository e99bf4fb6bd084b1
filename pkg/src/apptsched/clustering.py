"""Partitional and agglomerative clustering with the validity measures used
to pick the priority classes: WCSS elbow scan and silhouette comparison.

Distances: squared Euclidean inside the K-means objective (so the cluster
mean is the exact per-cluster minimizer), plain Euclidean for silhouette.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix

_CONVERGENCE_EPS = 1e-9
_MAX_ITER = 300


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray            # (rows,) ints in [0, k)
    centroids: np.ndarray         # (k, cols) cluster means
    wcss: float                   # sum of squared distances to own centroid
    k: int
    method: str                   # "kmeans" or "ward"
    merges: tuple | None = None   # ward only: (id_a, id_b, cost, new_size) rows


@dataclass(frozen=True)
class SilhouetteReport:
    per_point: np.ndarray
    mean: float


@dataclass(frozen=True)
class ElbowCurve:
    points: tuple                 # ((k, wcss), ...) for k = 1..k_max
    knee: int
    monotone: bool                # False flags a residual WCSS increase


def _as_array(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D data array")
    return arr


def compute_wcss(data, labels, centroids=None) -> float:
    """Recompute the clustering objective from scratch (used as a cross-check)."""
    x = _as_array(data)
    labels = np.asarray(labels)
    total = 0.0
    for j in np.unique(labels):
        members = x[labels == j]
        center = members.mean(axis=0) if centroids is None else centroids[j]
        total += float(((members - center) ** 2).sum())
    return total


def _seed_centroids(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding: after a random first pick, each next seed is
    drawn with probability proportional to its squared distance from the
    closest seed so far."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Assign/update iterations from the given seeds until centroids settle."""
    k = centers.shape[0]
    prev_wcss = np.inf
    for _ in range(_MAX_ITER):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)      # ties resolve to the lowest centroid index
        # repair empty clusters with the point farthest from its centroid
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            far = int(d2[np.arange(len(labels)), labels].argmax())
            labels[far] = j
            d2[far, :] = np.inf
            d2[far, j] = 0.0
            counts = np.bincount(labels, minlength=k)
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = x[labels == j].mean(axis=0)
        wcss = float(((x - new_centers[labels]) ** 2).sum())
        if wcss > prev_wcss + 1e-7:
            raise AssertionError("WCSS increased within a K-means run")
        prev_wcss = wcss
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if shift <= _CONVERGENCE_EPS:
            break
    return labels, centers, prev_wcss


def kmeans(data, k: int, seed: int = 0, restarts: int = 10) -> ClusteringResult:
    """Best-of-``restarts`` K-means; deterministic for a fixed seed.

    Ties between restarts go to the lowest restart index.
    """
    x = _as_array(data)
    n = x.shape[0]
    if k <= 0:
        raise ValueError("k must be a positive integer")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    if restarts <= 0:
        raise ValueError("restarts must be positive")
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for ss in seeds:
        rng = np.random.default_rng(ss)
        labels, centers, wcss = _lloyd(x, _seed_centroids(x, k, rng))
        if best is None or wcss < best[2] - 1e-15:
            best = (labels, centers, wcss)
    labels, centers, wcss = best
    return ClusteringResult(labels=labels, centroids=centers, wcss=wcss, k=k,
                            method="kmeans")


def _warm_start_split(x: np.ndarray, prev: ClusteringResult) -> np.ndarray:
    """Seed k+1 centroids from a k-solution plus its worst-fitting point.

    One Lloyd pass from here cannot end above the k-cluster WCSS, which keeps
    the elbow curve non-increasing.
    """
    d2 = ((x - prev.centroids[prev.labels]) ** 2).sum(axis=1)
    far = int(d2.argmax())
    return np.vstack([prev.centroids, x[far]])


def ward_agglomerative(data, k: int) -> ClusteringResult:
    """Bottom-up merging: repeatedly join the pair of clusters whose union
    gives the smallest increase in total within-cluster sum of squares.

    Ties break lexicographically on the clusters' smallest member indices.
    The merge log uses the linkage convention: original points are clusters
    0..n-1 and merge step j creates cluster n+j.
    """
    x = _as_array(data)
    n = x.shape[0]
    if k <= 0:
        raise ValueError("k must be a positive integer")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")

    means = x.copy()
    sizes = np.ones(n)
    ids = list(range(n))                 # linkage id per active cluster
    members: list[list[int]] = [[i] for i in range(n)]
    merges = []
    last_cost = -np.inf
    next_id = n
    while len(ids) > k:
        m = len(ids)
        diff = means[:, None, :] - means[None, :, :]
        d2 = (diff ** 2).sum(axis=2)
        factor = sizes[:, None] * sizes[None, :] / (sizes[:, None] + sizes[None, :])
        cost = factor * d2
        iu = np.triu_indices(m, 1)
        flat = cost[iu]
        pick = int(flat.argmin())        # row-major upper triangle = lexicographic
        a, b = iu[0][pick], iu[1][pick]
        merge_cost = float(flat[pick])
        if merge_cost < last_cost - 1e-9:
            warnings.warn("non-monotone merge cost in agglomerative clustering")
        last_cost = max(last_cost, merge_cost)

        new_size = sizes[a] + sizes[b]
        new_mean = (sizes[a] * means[a] + sizes[b] * means[b]) / new_size
        merges.append((ids[a], ids[b], merge_cost, int(new_size)))
        members[a] = members[a] + members[b]
        means[a] = new_mean
        sizes[a] = new_size
        ids[a] = next_id
        next_id += 1
        del members[b]
        del ids[b]
        means = np.delete(means, b, axis=0)
        sizes = np.delete(sizes, b)

    labels = np.empty(n, dtype=int)
    order = sorted(range(len(members)), key=lambda c: min(members[c]))
    centroids = np.empty((len(members), x.shape[1]))
    for new_label, c in enumerate(order):
        labels[members[c]] = new_label
        centroids[new_label] = x[members[c]].mean(axis=0)
    wcss = compute_wcss(x, labels, centroids)
    return ClusteringResult(labels=labels, centroids=centroids, wcss=wcss, k=k,
                            method="ward", merges=tuple(merges))


def silhouette(data, labels) -> SilhouetteReport:
    """Per-point silhouette (mu - zeta) / max(zeta, mu) with plain Euclidean
    distances; singleton clusters score 0 by convention."""
    x = _as_array(data)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise ValueError("silhouette needs at least two clusters")
    dist = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2), 0.0))
    n = x.shape[0]
    scores = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        own_size = own.sum()
        if own_size == 1:
            scores[i] = 0.0
            continue
        zeta = dist[i, own].sum() / (own_size - 1)
        mu = min(dist[i, labels == c].mean() for c in uniq if c != labels[i])
        denom = max(zeta, mu)
        scores[i] = 0.0 if denom == 0 else (mu - zeta) / denom
    return SilhouetteReport(per_point=scores, mean=float(scores.mean()))


def _knee_by_chord(points: list[tuple[int, float]]) -> int:
    """Largest perpendicular distance to the chord joining the curve ends,
    after scaling both axes to the unit square; ties take the smallest k."""
    if len(points) == 1:
        return points[0][0]
    ks = np.array([p[0] for p in points], dtype=float)
    ws = np.array([p[1] for p in points], dtype=float)
    ks = (ks - ks[0]) / (ks[-1] - ks[0])
    wspan = ws[0] - ws[-1]
    ws = (ws - ws[-1]) / wspan if wspan > 0 else np.zeros_like(ws)
    ax, ay = ks[0], ws[0]
    bx, by = ks[-1], ws[-1]
    norm = np.hypot(bx - ax, by - ay)
    dist = np.abs((bx - ax) * (ay - ws) - (ax - ks) * (by - ay)) / norm
    return points[int(dist.argmax())][0]


def elbow_scan(data, k_max: int, seed: int = 0, restarts: int = 10) -> ElbowCurve:
    """WCSS for k = 1..k_max plus the chord-criterion knee.

    Each k also tries a warm start seeded from the previous k's solution,
    which guarantees a non-increasing curve up to numerical noise.
    """
    x = _as_array(data)
    if not 1 <= k_max <= x.shape[0]:
        raise ValueError("k_max must lie in [1, rows]")
    points = []
    prev = None
    monotone = True
    for k in range(1, k_max + 1):
        result = kmeans(x, k, seed=seed + k, restarts=restarts)
        if prev is not None:
            labels, centers, wcss = _lloyd(x, _warm_start_split(x, prev))
            if wcss < result.wcss:
                result = ClusteringResult(labels=labels, centroids=centers,
                                          wcss=wcss, k=k, method="kmeans")
            if result.wcss > prev.wcss + 1e-7:
                monotone = False
        points.append((k, result.wcss))
        prev = result
    return ElbowCurve(points=tuple(points), knee=_knee_by_chord(points),
                      monotone=monotone)
