"""Dense linear algebra used by the sparse basis iteration.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  The small
symmetric eigenproblems that drive the SVD and the polar factor are solved with
a cyclic Jacobi method compiled by numba; large operators (transfer operator
demos with thousands of boxes) go through LAPACK instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.linalg

__all__ = [
    "LinalgError",
    "RankDeficient",
    "NotSymmetric",
    "NoConvergence",
    "WeightVector",
    "as_matrix",
    "frobenius_norm",
    "l11_norm",
    "l01_count",
    "qr_orthonormalize",
    "symmetric_eig",
    "svd_small",
    "polar_orthonormal",
    "spectral_norm",
]

JACOBI_MAX_N = 200


class LinalgError(ArithmeticError):
    pass


class RankDeficient(LinalgError):
    pass


class NotSymmetric(LinalgError, ValueError):
    pass


class NoConvergence(LinalgError):
    pass


@dataclass(frozen=True)
class WeightVector:
    """Strictly positive per-row weights ``nu``.

    ``total`` caches ``sum(nu)`` and ``sqrt`` caches ``nu ** 0.5``.
    """

    values: np.ndarray
    total: float = field(init=False)
    sqrt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nu = np.array(self.values, dtype=float).ravel()
        if nu.size == 0:
            raise ValueError("weight vector is empty")
        if not np.all(np.isfinite(nu)) or np.any(nu <= 0):
            raise ValueError("weights must be finite and strictly positive")
        nu.setflags(write=False)
        root = np.sqrt(nu)
        root.setflags(write=False)
        object.__setattr__(self, "values", nu)
        object.__setattr__(self, "total", float(nu.sum()))
        object.__setattr__(self, "sqrt", root)

    def __len__(self):
        return self.values.size

    @classmethod
    def coerce(cls, weights):
        if weights is None or isinstance(weights, cls):
            return weights
        return cls(weights)


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float64 array, raising ``ValueError`` otherwise."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")
    return A


def _row_weights(weights, p):
    w = WeightVector.coerce(weights)
    if w is not None and len(w) != p:
        raise ValueError(f"weight vector has length {len(w)}, expected {p}")
    return w


def frobenius_norm(A, weights=None):
    """Frobenius norm, optionally weighted by rows: ``sqrt(sum_ij nu_i A_ij^2)``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    w = _row_weights(weights, A.shape[0])
    if w is None:
        return float(np.sqrt(np.sum(A * A)))
    return float(np.sqrt(np.sum(w.values[:, None] * A * A)))


def l11_norm(A, weights=None):
    """Entrywise l1 norm, optionally weighted by rows."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    w = _row_weights(weights, A.shape[0])
    if w is None:
        return float(np.sum(np.abs(A)))
    return float(np.sum(w.values[:, None] * np.abs(A)))


def l01_count(A):
    """Number of entries that are exactly nonzero."""
    return int(np.count_nonzero(np.asarray(A)))


def qr_orthonormalize(M, tol=1e-10, weights=None):
    """Orthonormalize the columns of ``M`` keeping their order.

    Modified Gram-Schmidt with a second orthogonalization pass.  With
    ``weights`` the columns come out orthonormal in ``<x, y> = sum nu_i x_i y_i``.

    Raises
    ------
    RankDeficient
        If a column's remaining norm drops below ``tol`` times the largest
        input column norm.
    """
    M = as_matrix(M, "M")
    p, r = M.shape
    w = _row_weights(weights, p)
    nu = np.ones(p) if w is None else w.values

    def dot(x, y):
        return float(np.dot(nu * x, y))

    Q = M.copy()
    scale = max(np.sqrt(dot(Q[:, j], Q[:, j])) for j in range(r))
    if scale == 0.0:
        raise RankDeficient("all columns are zero")
    for j in range(r):
        q = Q[:, j]
        for _ in range(2):
            for i in range(j):
                q -= dot(Q[:, i], q) * Q[:, i]
        nrm = np.sqrt(dot(q, q))
        if nrm < tol * scale:
            raise RankDeficient(
                f"column {j} is linearly dependent on the previous ones "
                f"(residual norm {nrm:.3e})"
            )
        Q[:, j] = q / nrm
    return Q


@numba.njit(cache=True, nogil=True)
def _jacobi_kernel(a, v, max_sweeps):
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j] * a[i, j]
    if total == 0.0:
        return 0
    eps = 2.220446049250313e-16
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if off <= (eps * eps) * total:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                # rotations this small cannot change the diagonal in floating point
                if abs(apq) <= eps * 1e-3 * np.sqrt(abs(app * aqq)):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


def _fix_signs(X):
    # largest-magnitude entry of each column positive; first index wins ties
    idx = np.argmax(np.abs(X), axis=0)
    signs = np.sign(X[idx, np.arange(X.shape[1])])
    signs[signs == 0] = 1.0
    return X * signs


def symmetric_eig(A, method="auto", max_sweeps=60, symmetry_tol=1e-10, k=None):
    """Eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric matrix; ``||A - A.T||_F / ||A||_F`` must be below
        ``symmetry_tol``.
    method : {"auto", "jacobi", "lapack"}
        ``"auto"`` uses cyclic Jacobi for ``n <= 200`` and LAPACK ``syevd``
        above that.
    max_sweeps : int
        Sweep cap for the Jacobi method.
    k : int, optional
        Only return the ``k`` largest eigenpairs (the LAPACK path then
        computes just those).

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues in descending order.
    X : (n, n) ndarray
        Orthonormal eigenvectors as columns, each with its largest-magnitude
        entry positive.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError(f"matrix must be square, got {A.shape}")
    nrm = np.linalg.norm(A)
    if nrm > 0 and np.linalg.norm(A - A.T) / nrm >= symmetry_tol:
        raise NotSymmetric("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        work = np.array(A, order="C")
        X = np.eye(n)
        if _jacobi_kernel(work, X, max_sweeps) < 0:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
        w = np.diag(work).copy()
    elif method == "lapack":
        if k is not None and k < n:
            w, X = scipy.linalg.eigh(A, subset_by_index=[n - k, n - 1])
        else:
            w, X = np.linalg.eigh(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    if k is not None:
        order = order[:k]
    return w[order], _fix_signs(X[:, order])


def _complete_basis(P, k):
    """Replace columns ``k:`` of orthonormal-prefix ``P`` with a deterministic completion."""
    n, m = P.shape
    basis = [P[:, j] for j in range(k)]
    for e in np.eye(n):
        if len(basis) == m:
            break
        q = e.copy()
        for _ in range(2):
            for b in basis:
                q -= np.dot(b, q) * b
        nq = np.linalg.norm(q)
        if nq > 1e-8:
            basis.append(q / nq)
    return np.column_stack(basis)


def svd_small(A, zero_tol=None):
    """SVD ``A = P @ diag(d) @ Q.T`` of a small square matrix.

    Computed from the Jacobi eigendecomposition of ``A.T @ A``; left vectors
    come from ``A @ q_i`` and are re-orthogonalized.  Singular values at or
    below ``zero_tol`` (default ``n * eps * d_max``) are set to zero and their
    left vectors completed from the coordinate axes, so the result is
    reproducible for rank-deficient input.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError(f"svd_small expects a square matrix, got {A.shape}")
    if n > 256:
        raise ValueError("svd_small is limited to 256 x 256")
    _, Q = symmetric_eig(A.T @ A, method="jacobi")
    AQ = A @ Q
    d = np.linalg.norm(AQ, axis=0)
    order = np.argsort(-d, kind="stable")
    d, Q, AQ = d[order], Q[:, order], AQ[:, order]
    if zero_tol is None:
        zero_tol = n * np.finfo(float).eps * (d[0] if n else 0.0)
    k = int(np.sum(d > zero_tol))
    P = np.zeros((n, n))
    for j in range(k):
        q = AQ[:, j] / d[j]
        for _ in range(2):
            for i in range(j):
                q -= np.dot(P[:, i], q) * P[:, i]
        P[:, j] = q / np.linalg.norm(q)
    d[k:] = 0.0
    if k < n:
        P = _complete_basis(P, k)
    return P, d, Q


def polar_orthonormal(A):
    """Orthogonal factor ``R`` of the polar decomposition ``A = R H``.

    ``R = P @ Q.T`` from :func:`svd_small`; it is the orthogonal matrix
    closest to ``A`` in the Frobenius norm.
    """
    P, _, Q = svd_small(A)
    return P @ Q.T


def spectral_norm(A):
    """Matrix 2-norm (largest singular value) of a small square matrix."""
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        A = A.T @ A if A.shape[0] > A.shape[1] else A @ A.T
        w, _ = symmetric_eig(A)
        return float(np.sqrt(max(w[0], 0.0)))
    _, d, _ = svd_small(A)
    return float(d[0])
