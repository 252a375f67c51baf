"""Turning a sparse basis into hard feature assignments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FeatureAssignment",
    "hard_threshold",
    "partition_unity_threshold",
    "disjoint_support_threshold",
    "partition_unity",
    "disjoint_support",
    "max_likelihood",
    "manual",
    "superposition",
]


@dataclass
class FeatureAssignment:
    """Feature vector ``a`` (1-based column labels, 0 = unassigned)."""

    a: np.ndarray
    thresholded_S: np.ndarray
    tau: float
    method: str

    @property
    def counts(self):
        return np.bincount(self.a, minlength=self.thresholded_S.shape[1] + 1)


def _matrix(S):
    S = getattr(S, "S", S)
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    return S


def hard_threshold(z, mu):
    """Keep entries with ``|z| > mu``, zero the rest."""
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) > mu, z, 0.0)


def _argmax_labels(S):
    # np.argmax returns the first maximal column, i.e. the smallest index on ties
    j = np.argmax(S, axis=1)
    top = S[np.arange(S.shape[0]), j]
    return np.where(top > 0, j + 1, 0)


def partition_unity_threshold(S):
    """Smallest uniform threshold making the clamped rows sum to at most one."""
    S = np.maximum(_matrix(S), 0.0)
    srt = -np.sort(-S, axis=1)
    over = np.cumsum(srt, axis=1) > 1.0
    return float(srt[over].max()) if over.any() else 0.0


def disjoint_support_threshold(S):
    """Largest second-largest row entry of the clamped matrix."""
    S = np.maximum(_matrix(S), 0.0)
    if S.shape[1] < 2:
        return 0.0
    srt = -np.sort(-S, axis=1)
    return float(srt[:, 1].max())


def partition_unity(S):
    """Threshold so that the columns form a sub-partition of unity, then label.

    Negative entries are clamped to zero, ``tau`` is the largest sorted row
    entry at which a running row sum first exceeds one (zero if no row sum
    exceeds one), and every entry ``<= tau`` is dropped.  Each row goes to its
    largest surviving column.
    """
    S = np.maximum(_matrix(S), 0.0)
    tau = partition_unity_threshold(S)
    T = hard_threshold(S, tau)
    return FeatureAssignment(_argmax_labels(T), T, tau, "partition_unity")


def disjoint_support(S):
    """Threshold at the largest second-largest row entry so supports are disjoint."""
    S = np.maximum(_matrix(S), 0.0)
    tau = disjoint_support_threshold(S)
    T = hard_threshold(S, tau)
    return FeatureAssignment(_argmax_labels(T), T, tau, "disjoint_support")


def max_likelihood(S):
    """Label each row with its largest column when that entry is positive."""
    S = _matrix(S)
    return FeatureAssignment(_argmax_labels(S), S.copy(), 0.0, "max_likelihood")


def manual(S, tau):
    """User-chosen uniform threshold on the clamped columns."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    T = hard_threshold(np.maximum(_matrix(S), 0.0), tau)
    return FeatureAssignment(_argmax_labels(T), T, float(tau), "manual")


def superposition(S):
    """``min(1, sum_j max(S_ij, 0))`` for every row."""
    return np.minimum(1.0, np.maximum(_matrix(S), 0.0).sum(axis=1))
