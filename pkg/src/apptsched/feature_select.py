"""Unsupervised feature selection: entropy-based ranking followed by a
forward wrapper search scored with the scatter-matrix invariant criterion
tr(P_W^-1 P_B).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import kmeans
from .dataset import FeatureMatrix

RIDGE = 1e-8
WRAPPER_TOL = 1e-6


@dataclass(frozen=True)
class EntropyRanking:
    e_all: float
    per_feature: tuple           # (column, e_without, importance) per active column
    order: tuple                 # columns sorted by importance, descending
    degenerate: tuple            # columns whose removal left all points identical


@dataclass(frozen=True)
class ScatterStats:
    p_w: np.ndarray
    p_b: np.ndarray
    total_mean: np.ndarray
    cluster_means: np.ndarray
    criterion: float


@dataclass(frozen=True)
class SubsetSelection:
    selected: tuple              # prefix of the ranking order
    trace_curve: tuple           # criterion after each accepted feature
    stopped_at: int              # index of the first step that failed to improve


def _as_array(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.data
    return np.asarray(data, dtype=float)


def _pair_distances(x: np.ndarray) -> np.ndarray:
    """Upper-triangle Euclidean distances between all point pairs."""
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    iu = np.triu_indices(x.shape[0], 1)
    return np.sqrt(np.maximum(d2[iu], 0.0))


def similarity_entropy(dists: np.ndarray) -> float:
    """Entropy of pairwise similarities S = exp(-alpha * dist).

    alpha is calibrated as ln(2) / mean distance so that S equals 0.5 at the
    mean distance.  Terms at S in {0, 1} contribute zero.  The sum runs over
    ordered pairs (each unordered pair counted twice), natural log.
    """
    dbar = float(dists.mean())
    if dbar == 0.0:
        return 0.0
    s = np.exp(-(np.log(2.0) / dbar) * dists)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(s > 0.0, s * np.log(s), 0.0)
        right = np.where(s < 1.0, (1.0 - s) * np.log(1.0 - s), 0.0)
    return float(-2.0 * (left + right).sum())


def entropy_rank(data) -> EntropyRanking:
    """Rank features by how much disorder their removal leaves behind.

    Removing a structure-carrying feature pushes the remaining pairwise
    similarities toward 0.5 and the entropy up, so importance is measured as
    e_without - e_all and features are ranked by it in descending order.
    """
    x = _as_array(data)
    n, q = x.shape
    if n < 2 or q < 2:
        raise ValueError("entropy ranking needs at least 2 rows and 2 features")
    e_all = similarity_entropy(_pair_distances(x))
    per_feature = []
    degenerate = []
    for col in range(q):
        rest = np.delete(x, col, axis=1)
        dists = _pair_distances(rest)
        if float(dists.mean()) == 0.0:
            degenerate.append(col)
            e_without = 0.0
        else:
            e_without = similarity_entropy(dists)
        per_feature.append((col, e_without, e_without - e_all))
    order = sorted(range(q), key=lambda c: (-per_feature[c][2], c))
    return EntropyRanking(e_all=e_all, per_feature=tuple(per_feature),
                          order=tuple(order), degenerate=tuple(degenerate))


def scatter_criterion(data, labels) -> ScatterStats:
    """Within/between scatter matrices of a labeled dataset.

    criterion = tr((P_W + ridge*I)^-1 P_B); the ridge keeps the inverse
    defined when a subset of columns is constant within clusters.  A single
    cluster gives P_B = 0 and criterion 0.
    """
    x = _as_array(data)
    if not np.all(np.isfinite(x)):
        raise ValueError("scatter criterion requires finite data")
    if x.ndim != 2 or x.shape[1] == 0:
        raise ValueError("scatter criterion requires a nonempty column subset")
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    q = x.shape[1]
    m = x.mean(axis=0)
    p_w = np.zeros((q, q))
    p_b = np.zeros((q, q))
    cluster_means = np.empty((len(uniq), q))
    for row, c in enumerate(uniq):
        pts = x[labels == c]
        mj = pts.mean(axis=0)
        cluster_means[row] = mj
        dev = pts - mj
        p_w += dev.T @ dev
        off = (mj - m)[:, None]
        p_b += off @ off.T
    crit = float(np.trace(np.linalg.solve(p_w + RIDGE * np.eye(q), p_b)))
    return ScatterStats(p_w=p_w, p_b=p_b, total_mean=m,
                        cluster_means=cluster_means, criterion=crit)


def wrapper_select(data, ranking: EntropyRanking, k: int, seed: int = 0,
                   restarts: int = 8, tol: float = WRAPPER_TOL) -> SubsetSelection:
    """Forward search along the entropy ranking.

    Each step adds the next-ranked feature, re-clusters the candidate subset
    and scores it; the search stops at the first step whose criterion gain
    falls below ``tol`` and returns the subset accepted so far.  The first
    feature is always accepted (there is nothing to compare it against).
    """
    x = _as_array(data)
    if sorted(ranking.order) != list(range(x.shape[1])):
        raise ValueError("ranking does not cover the active features")
    selected: list[int] = []
    trace: list[float] = []
    previous = None
    stopped_at = len(ranking.order)
    for step, col in enumerate(ranking.order):
        candidate = selected + [col]
        result = kmeans(x[:, candidate], k, seed=seed, restarts=restarts)
        crit = scatter_criterion(x[:, candidate], result.labels).criterion
        if previous is not None and crit - previous < tol:
            stopped_at = step
            break
        selected.append(col)
        trace.append(crit)
        previous = crit
    return SubsetSelection(selected=tuple(selected), trace_curve=tuple(trace),
                           stopped_at=stopped_at)
