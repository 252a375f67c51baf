"""Sparse eigenbasis approximation.

Given an orthonormal ``p x r`` matrix ``V`` the iteration alternates between a
soft-thresholding step for ``S`` (columns of unit length) and a Procrustes step
for the rotation ``R``, minimising

    0.5 * ||V - S R||_F^2 + mu * ||S||_{1,1}

from ``R = I``.  After convergence the columns are sign-fixed to have a
nonnegative sum, scaled to a maximum of one and ordered by decreasing minimum
entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import (
    WeightVector,
    as_matrix,
    frobenius_norm,
    l01_count,
    l11_norm,
    polar_orthonormal,
    qr_orthonormalize,
    spectral_norm,
)

__all__ = [
    "OPERATOR_KINDS",
    "DegenerateColumn",
    "WeightMismatch",
    "EigenBasis",
    "SebaConfig",
    "SparseBasis",
    "soft_threshold",
    "objective",
    "seba",
    "seba_weighted",
]

OPERATOR_KINDS = ("laplace_neumann", "laplace_dirichlet", "markov")
_KIND_ALIASES = {"neumann": "laplace_neumann", "dirichlet": "laplace_dirichlet"}


class DegenerateColumn(ArithmeticError):
    """A soft-thresholded column vanished; ``mu`` is too large for the data."""


class WeightMismatch(ValueError):
    pass


def normalize_kind(kind):
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    return kind


@dataclass(frozen=True)
class EigenBasis:
    """Leading eigenvectors (or singular vectors) of a clustering operator.

    Attributes
    ----------
    V : (p, r) ndarray
        Orthonormal columns (in ``<.,.>_nu`` when ``weights`` is given).
    eigenvalues : (r,) ndarray or None
        Descending eigenvalues matching the columns.
    kind : str
        ``"laplace_neumann"``, ``"laplace_dirichlet"`` or ``"markov"``.
    manifold_dim : int
        Dimension ``d`` of the underlying manifold.
    weights : WeightVector or None
    """

    V: np.ndarray
    eigenvalues: np.ndarray | None = None
    kind: str = "laplace_neumann"
    manifold_dim: int = 2
    weights: WeightVector | None = None
    ortho_tol: float = 1e-8

    def __post_init__(self):
        V = as_matrix(self.V, "V")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if int(self.manifold_dim) < 1:
            raise ValueError("manifold_dim must be >= 1")
        w = WeightVector.coerce(self.weights)
        if w is not None and len(w) != V.shape[0]:
            raise WeightMismatch(f"weights have length {len(w)}, V has {V.shape[0]} rows")
        object.__setattr__(self, "weights", w)
        G = V.T @ V if w is None else V.T @ (w.values[:, None] * V)
        err = np.max(np.abs(G - np.eye(V.shape[1])))
        if err > self.ortho_tol:
            raise ValueError(f"columns of V are not orthonormal (max deviation {err:.2e})")
        if self.eigenvalues is not None:
            lam = np.asarray(self.eigenvalues)
            if lam.shape != (V.shape[1],):
                raise ValueError("need one eigenvalue per column")
            if not np.iscomplexobj(lam):
                lam = lam.astype(float)
                _check_spectrum(lam, self.kind)
            object.__setattr__(self, "eigenvalues", lam)

    @property
    def p(self):
        return self.V.shape[0]

    @property
    def r(self):
        return self.V.shape[1]

    @classmethod
    def from_vectors(cls, M, eigenvalues=None, kind="laplace_neumann",
                     manifold_dim=2, weights=None, tol=1e-10):
        """Build a basis from possibly non-orthogonal vectors via QR."""
        Q = qr_orthonormalize(M, tol=tol, weights=weights)
        return cls(Q, eigenvalues, kind, manifold_dim, weights)

    def truncate(self, r):
        """First ``r`` columns (and eigenvalues)."""
        if not 1 <= r <= self.r:
            raise ValueError(f"cannot take {r} of {self.r} columns")
        lam = None if self.eigenvalues is None else self.eigenvalues[:r]
        return replace(self, V=self.V[:, :r], eigenvalues=lam)


def _check_spectrum(lam, kind, tol=1e-8):
    if kind == "markov":
        if np.any(np.abs(lam) > 1 + tol):
            raise ValueError("Markov eigenvalues must lie in the unit disk")
    elif kind == "laplace_neumann":
        if np.any(lam > tol):
            raise ValueError("Neumann Laplace eigenvalues must be <= 0")
    elif np.any(lam >= 0):
        raise ValueError("Dirichlet Laplace eigenvalues must be < 0")


@dataclass(frozen=True)
class SebaConfig:
    """Iteration parameters.

    ``mu=None`` means ``0.99 / sqrt(p)`` (``0.99 / sqrt(sum(nu))`` when
    weighted), resolved once the basis is known.  An explicit ``mu`` must lie
    strictly below ``1 / sqrt(p)``; :func:`seba` enforces this.
    """

    mu: float | None = None
    tol: float = 1e-14
    max_iter: int = 5000

    def __post_init__(self):
        if self.mu is not None and not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError("mu must be a positive number")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")

    def resolve_mu(self, mass):
        """Return the sparsity parameter for total row mass ``p`` (or ``sum(nu)``)."""
        bound = 1.0 / np.sqrt(mass)
        if self.mu is None:
            return 0.99 * bound
        if not self.mu < bound:
            raise ValueError(
                f"mu={self.mu:g} must be below 1/sqrt({mass:g}) = {bound:g}"
            )
        return float(self.mu)


@dataclass
class SparseBasis:
    """Result of :func:`seba`.

    Attributes
    ----------
    S : (p, r) ndarray
        Sparse basis, every column with maximum entry 1, ordered so that
        ``m`` is descending.
    R : (r, r) ndarray
        Rotation with ``V ~= S_unit @ R``.
    m : (r,) ndarray
        Column minima of ``S``.
    S_unit : (p, r) ndarray
        The same columns before max-scaling (unit length, or unit
        ``l2,nu`` length in the weighted case).
    iterations, converged
        Iteration count and whether the rotation change dropped below ``tol``.
    metrics : dict
        ``subspace_error``, ``absolute_sparsity`` and ``relative_sparsity``.
    history : list of float
        Objective value after every iteration when requested.
    """

    S: np.ndarray
    R: np.ndarray
    m: np.ndarray
    S_unit: np.ndarray
    iterations: int
    converged: bool
    metrics: dict
    mu: float
    tol: float
    history: list = field(default_factory=list)
    orthogonality: list = field(default_factory=list)

    @property
    def p(self):
        return self.S.shape[0]

    @property
    def r(self):
        return self.S.shape[1]

    def sidecar(self):
        """Flat ``key=value`` record for serialization next to ``S``."""
        out = {
            "mu": self.mu,
            "tol": self.tol,
            "iterations": self.iterations,
            "converged": self.converged,
            "p": self.p,
            "r": self.r,
            "m": list(self.m),
        }
        out.update(self.metrics)
        return out


def soft_threshold(z, mu):
    """``sign(z) * max(|z| - mu, 0)``, elementwise; ``mu`` may broadcast."""
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - mu, 0.0)


def objective(V, S, R, mu):
    """``0.5 ||V - S R||_F^2 + mu ||S||_{1,1}``; ``mu`` may be a per-row vector."""
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 1:
        mu = mu[:, None]
    D = V - S @ R
    return 0.5 * float(np.sum(D * D)) + float(np.sum(mu * np.abs(S)))


def _iterate(V, thresh, tol, max_iter, record):
    r = V.shape[1]
    R = np.eye(r)
    history, ortho = [], []
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        C = soft_threshold(V @ R.T, thresh)
        norms = np.linalg.norm(C, axis=0)
        dead = np.flatnonzero(norms == 0.0)
        if dead.size:
            raise DegenerateColumn(
                f"column {dead[0]} was thresholded to zero; decrease mu"
            )
        S = C / norms
        R_new = polar_orthonormal(S.T @ V)
        change = spectral_norm(R_new - R)
        R = R_new
        if record:
            history.append(objective(V, S, R, thresh))
            ortho.append(float(np.max(np.abs(R.T @ R - np.eye(r)))))
        if change <= tol:
            converged = True
            break
    return S, R, it, converged, history, ortho


def _finish(S_unit, R, col_mass):
    """Sign fix, max scaling and reliability ordering.

    ``col_mass(S)`` returns the per-column quantity whose sign decides the flip.
    Returns the sign-fixed unit columns and rotation in the final order as well.
    """
    sums = col_mass(S_unit)
    signs = np.where(sums < 0, -1.0, 1.0)
    # adding 0.0 turns -0.0 into 0.0 so written files do not show signed zeros
    S_unit = S_unit * signs + 0.0
    R = R * signs[:, None]
    S = S_unit / S_unit.max(axis=0) + 0.0
    m = S.min(axis=0)
    order = np.argsort(-m, kind="stable")
    return S[:, order], m[order], S_unit[:, order], R[order, :]


def _metrics(V, S_unit, R, weights):
    r = V.shape[1]
    err = frobenius_norm(V - S_unit @ R, weights) ** 2 / r
    return {
        "subspace_error": err,
        "absolute_sparsity": l01_count(S_unit) / S_unit.size,
        "relative_sparsity": l11_norm(S_unit, weights) / l11_norm(V, weights),
    }


def _as_basis(basis, weights=None):
    if isinstance(basis, EigenBasis):
        return basis
    return EigenBasis(basis, weights=weights)


def seba(basis, cfg=None, record=False):
    """Sparse eigenbasis approximation of an orthonormal basis.

    Parameters
    ----------
    basis : EigenBasis or (p, r) array_like
        Orthonormal vectors.  A weighted basis is forwarded to
        :func:`seba_weighted`.
    cfg : SebaConfig, optional
    record : bool
        Store the objective value and ``max|R^T R - I|`` after each iteration.

    Returns
    -------
    SparseBasis

    Raises
    ------
    DegenerateColumn
        If some soft-thresholded column is identically zero.
    """
    basis = _as_basis(basis)
    if basis.weights is not None:
        return seba_weighted(basis, cfg, record)
    cfg = cfg or SebaConfig()
    V = basis.V
    mu = cfg.resolve_mu(basis.p)
    S_unit, R, it, converged, hist, ortho = _iterate(V, mu, cfg.tol, cfg.max_iter, record)
    metrics = _metrics(V, S_unit, R, None)
    S, m, S_unit, R = _finish(S_unit, R, lambda X: X.sum(axis=0))
    return SparseBasis(S, R, m, S_unit, it, converged, metrics, mu, cfg.tol, hist, ortho)


def seba_weighted(basis, cfg=None, record=False, weights=None):
    """Weighted variant with per-row weights ``nu > 0``.

    Runs the unweighted iteration on ``D^{1/2} V`` with the row-dependent
    threshold ``mu * sqrt(nu_i)``, then maps back through ``D^{-1/2}``.  The
    sign of each column is chosen so that ``nu . s_j >= 0``.
    """
    if weights is not None and not isinstance(basis, EigenBasis):
        V = as_matrix(basis, "V")
        if np.size(weights) != V.shape[0]:
            raise WeightMismatch(f"weights have length {np.size(weights)}, V has {V.shape[0]} rows")
        basis = EigenBasis(V, weights=weights)
    basis = _as_basis(basis)
    w = WeightVector.coerce(weights) if weights is not None else basis.weights
    if w is None:
        raise ValueError("seba_weighted needs a weight vector")
    if len(w) != basis.p:
        raise WeightMismatch(f"weights have length {len(w)}, V has {basis.p} rows")
    if basis.weights is None:
        basis = EigenBasis(basis.V, basis.eigenvalues, basis.kind, basis.manifold_dim, w)
    cfg = cfg or SebaConfig()
    mu = cfg.resolve_mu(w.total)
    Vp = w.sqrt[:, None] * basis.V
    thresh = (mu * w.sqrt)[:, None]
    Sp, R, it, converged, hist, ortho = _iterate(Vp, thresh, cfg.tol, cfg.max_iter, record)
    S_unit = Sp / w.sqrt[:, None]
    metrics = _metrics(basis.V, S_unit, R, w)
    S, m, S_unit, R = _finish(S_unit, R, lambda X: w.values @ X)
    return SparseBasis(S, R, m, S_unit, it, converged, metrics, mu, cfg.tol, hist, ortho)
