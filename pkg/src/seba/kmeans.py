"""k-means on the rows of an eigenbasis, the coarse baseline for the sparse basis.

Thresholding the rows of ``V`` into ``k`` clusters gives a hard, nonoverlapping
version of what the sparse basis produces softly.  Lloyd iterations and
k-means++ seeding come from :func:`scipy.cluster.vq.kmeans2`; this module adds
seeded restarts and picks the run with the smallest within-cluster sum of
squares.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.vq import kmeans2

__all__ = ["KMeansResult", "kmeans_baseline", "within_cluster_ss"]


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    restart: int


def within_cluster_ss(X, labels, centroids):
    """Sum of squared distances from each point to its centroid."""
    diff = X - centroids[labels]
    return float(np.sum(diff * diff))


def _relabel(labels, k):
    # clusters numbered by first appearance so equal partitions print equally
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
            if len(order) == k:
                break
    order += [c for c in range(k) if c not in order]
    mapping = np.empty(k, dtype=int)
    mapping[order] = np.arange(k)
    return mapping[labels], np.array(order)


def kmeans_baseline(points, k, restarts=10, seed=0, max_iter=300):
    """Cluster the rows of ``points`` into ``k`` groups.

    Parameters
    ----------
    points : (n, r) array_like
        Rows of an eigenbasis ``V`` (or of a sparse basis ``S``).
    k : int
        Number of clusters, ``1 <= k <= n``.
    restarts : int
        Independent k-means++ seedings; the lowest within-cluster sum of
        squares wins, earlier restarts winning ties.
    seed : int
        Seed of the PCG64 generator driving all restarts.

    Returns
    -------
    KMeansResult
        ``labels`` are 0-based and numbered by first appearance.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if k == 1:
        c = X.mean(axis=0, keepdims=True)
        labels = np.zeros(n, dtype=int)
        return KMeansResult(labels, c, within_cluster_ss(X, labels, c), 0)

    rng = np.random.default_rng(seed)
    best = None
    for attempt in range(restarts):
        with warnings.catch_warnings():
            # an emptied cluster only makes this restart lose
            warnings.simplefilter("ignore")
            cent, labels = kmeans2(X, k, iter=max_iter, minit="++", seed=rng,
                                   missing="warn")
        inertia = within_cluster_ss(X, labels, cent)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, cent, inertia, attempt)
    labels, order = _relabel(best.labels, k)
    best.labels = labels
    best.centroids = best.centroids[order]
    return best
