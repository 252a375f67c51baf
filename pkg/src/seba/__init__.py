"""Sparse eigenbasis approximation (SEBA).

Turns a handful of leading eigenvectors of a clustering operator into a sparse
basis of the same subspace whose columns each pick out one feature, plus
heuristics for how many vectors to use and rules for hard feature assignment.

The main entry points are re-exported here::

    from seba import EigenBasis, seba, disjoint_support
"""
from .basis import (DegenerateColumn, EigenBasis, SebaConfig, SparseBasis,
                    WeightMismatch, objective, seba, seba_weighted, soft_threshold)
from .cheeger import CheegerResult, DegenerateField, GridField, cheeger_threshold
from .heuristics import (EmptyTable, KindMismatch, RescaledSpectrum, ScanTable,
                         min_value_profile, scan, select_kr, weyl_rescale)
from .kmeans import kmeans_baseline
from .linalg import (LinalgError, NoConvergence, NotSymmetric, RankDeficient,
                     WeightVector, polar_orthonormal, qr_orthonormalize, svd_small,
                     symmetric_eig)
from .thresholding import (FeatureAssignment, disjoint_support, hard_threshold,
                           manual, max_likelihood, partition_unity, superposition)

__version__ = "0.1.0"

__all__ = [
    "DegenerateColumn", "EigenBasis", "SebaConfig", "SparseBasis", "WeightMismatch",
    "objective", "seba", "seba_weighted", "soft_threshold",
    "CheegerResult", "DegenerateField", "GridField", "cheeger_threshold",
    "EmptyTable", "KindMismatch", "RescaledSpectrum", "ScanTable",
    "min_value_profile", "scan", "select_kr", "weyl_rescale",
    "kmeans_baseline",
    "LinalgError", "NoConvergence", "NotSymmetric", "RankDeficient", "WeightVector",
    "polar_orthonormal", "qr_orthonormalize", "svd_small", "symmetric_eig",
    "FeatureAssignment", "disjoint_support", "hard_threshold", "manual",
    "max_likelihood", "partition_unity", "superposition",
]
