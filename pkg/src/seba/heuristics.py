"""Choosing how many vectors to feed the sparse basis and how many to keep.

* :func:`weyl_rescale` flattens the Weyl-law growth of a spectrum so eigengaps
  can be compared along it.
* :func:`min_value_profile` sums the negated column minima of a sparse basis.
* :func:`scan` repeats the sparse basis for ``r = 2 .. r_max`` and tabulates
  the partial sums for every ``k <= r``; :func:`select_kr` reads off the
  recommended ``(k, r)`` pairs.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import DegenerateColumn, EigenBasis, SebaConfig, normalize_kind, seba

__all__ = [
    "KindMismatch",
    "EmptyTable",
    "RescaledSpectrum",
    "ScanTable",
    "weyl_rescale",
    "min_value_profile",
    "scan",
    "select_kr",
]


class KindMismatch(ValueError):
    pass


class EmptyTable(ValueError):
    pass


@dataclass
class RescaledSpectrum:
    kind: str
    d: int
    r: np.ndarray
    values: np.ndarray
    drops: list
    skipped: list = field(default_factory=list)

    def flagged(self, atol=1e-12):
        """Drops that are genuine decreases, largest first."""
        scale = max(1.0, float(np.max(np.abs(self.values)))) if self.values.size else 1.0
        return [(r, mag) for r, mag in self.drops if mag > atol * scale]

    def largest_drops(self, n=2, r_max=None):
        """Positions ``r`` of the ``n`` largest drops from ``r`` to ``r + 1``."""
        drops = self.flagged()
        if r_max is not None:
            drops = [(r, m) for r, m in drops if r + 1 <= r_max]
        return [r for r, _ in drops[:n]]


def weyl_rescale(eigenvalues, kind, d, kind_tol=1e-6):
    """Weyl-rescaled spectrum.

    ``laplace_neumann``: ``lambda_r / (r-1)^(2/d)`` for ``r >= 2``.
    ``laplace_dirichlet``: ``lambda_r / r^(2/d)`` for ``r >= 1``.
    ``markov``: ``Re(log lambda_r) / (r-1)^(2/d)`` for ``r >= 2``; entries with
    ``lambda_r <= 0`` (or zero modulus) are skipped with a warning.

    ``drops`` lists ``(r, value[r] - value[r+1])`` for consecutive retained
    ``r``, sorted by decreasing drop.
    """
    kind = normalize_kind(kind)
    lam = np.asarray(eigenvalues)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("need a non-empty 1-D eigenvalue list")
    d = int(d)
    if d < 1:
        raise ValueError("d must be >= 1")
    lead = lam[0]
    if kind == "markov":
        if abs(lead - 1.0) > kind_tol:
            raise KindMismatch(f"Markov spectrum should start at 1, got {lead}")
    elif kind == "laplace_neumann":
        if abs(lead) > kind_tol:
            raise KindMismatch(f"Neumann spectrum should start at 0, got {lead}")
    elif np.real(lead) > kind_tol:
        raise KindMismatch(f"Dirichlet spectrum should be negative, got {lead}")

    idx = np.arange(1, lam.size + 1)
    rs, vals, skipped = [], [], []
    for r, x in zip(idx, lam):
        if kind == "laplace_dirichlet":
            rs.append(r)
            vals.append(float(np.real(x)) / r ** (2.0 / d))
            continue
        if r == 1:
            continue
        if kind == "laplace_neumann":
            num = float(np.real(x))
        else:
            bad = abs(x) == 0 if np.iscomplexobj(lam) else x <= 0
            if bad:
                skipped.append(int(r))
                continue
            num = float(np.log(complex(x)).real)
        rs.append(r)
        vals.append(num / (r - 1) ** (2.0 / d))
    if skipped:
        warnings.warn(f"skipped non-positive Markov eigenvalues at r={skipped}",
                      RuntimeWarning, stacklevel=2)
    rs = np.array(rs, dtype=int)
    vals = np.array(vals, dtype=float)
    drops = [
        (int(rs[i]), float(vals[i] - vals[i + 1]))
        for i in range(len(rs) - 1)
        if rs[i + 1] == rs[i] + 1
    ]
    drops.sort(key=lambda t: (-t[1], t[0]))
    return RescaledSpectrum(kind, d, rs, vals, drops, skipped)


def min_value_profile(S):
    """Column minima ``m_j`` and ``Min(S) = -sum_j m_j``.

    ``S`` is a :class:`~seba.basis.SparseBasis` or an already-ordered array.
    """
    m = S.m if hasattr(S, "m") else np.asarray(S, dtype=float).min(axis=0)
    return np.asarray(m, dtype=float), float(-np.sum(m))


@dataclass
class ScanTable:
    """``Min(S^(r), k)`` for ``2 <= r <= r_max`` and ``1 <= k <= r``.

    ``r_min_of_k[k]`` is the smallest ``r`` attaining the minimum of
    ``Min(S^(r), k)`` over ``k <= r <= r_max``.
    """

    r_max: int
    minval: dict
    r_min_of_k: dict
    optimal_pairs: list
    failed: list = field(default_factory=list)
    results: dict = field(default_factory=dict, repr=False)

    @property
    def rs(self):
        return sorted({r for r, _ in self.minval})

    def curve(self, k):
        """``(r, Min(S^(r), k))`` arrays for the k-th stacked line."""
        rs = [r for r in self.rs if (r, k) in self.minval]
        return np.array(rs), np.array([self.minval[r, k] for r in rs])

    def rows(self):
        return [(r, k, self.minval[r, k]) for r, k in sorted(self.minval)]


def _tabulate(results, r_max):
    minval = {}
    for r, sb in results.items():
        partial = np.cumsum(-sb.m) + 0.0
        for k in range(1, r + 1):
            minval[r, k] = float(partial[k - 1])
    r_min = {}
    ks = sorted({k for _, k in minval})
    for k in ks:
        cands = [r for r in sorted(results) if r >= k]
        if not cands:
            continue
        vals = [minval[r, k] for r in cands]
        r_min[k] = cands[int(np.argmin(vals))]
    pairs = [(k, r_min[k]) for k in sorted(r_min)]
    return minval, r_min, pairs


def scan(basis, r_max, cfg=None, threads=None, keep_results=False):
    """Run the sparse basis on the first ``r`` columns for ``r = 2 .. r_max``.

    Each ``r`` starts from the identity rotation, so runs are independent and
    are spread over ``threads`` worker threads.  An ``r`` whose run raises
    :class:`~seba.basis.DegenerateColumn` is left out of the table with a
    warning and listed in ``ScanTable.failed``.
    """
    if not isinstance(basis, EigenBasis):
        basis = EigenBasis(basis)
    if not 2 <= r_max <= basis.r:
        raise ValueError(f"r_max must be in [2, {basis.r}], got {r_max}")
    cfg = cfg or SebaConfig()

    def run(r):
        try:
            return r, seba(basis.truncate(r), cfg)
        except DegenerateColumn as exc:
            return r, exc

    rs = range(2, r_max + 1)
    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, rs))
    else:
        out = [run(r) for r in rs]
    results, failed = {}, []
    for r, res in out:
        if isinstance(res, Exception):
            failed.append(r)
            warnings.warn(f"scan: r={r} failed: {res}", RuntimeWarning, stacklevel=2)
        else:
            results[r] = res
    minval, r_min, pairs = _tabulate(results, r_max)
    return ScanTable(r_max, minval, r_min, pairs, failed,
                     results if keep_results else {})


def select_kr(table):
    """Recommended ``(k, r)`` pairs: the lowest ``k`` of each vertical strip.

    A strip is a maximal run of consecutive ``k`` sharing the same
    ``r_min(k)``.  Pairs are returned in ascending ``r`` (then ``k``).
    """
    pairs = table.optimal_pairs if isinstance(table, ScanTable) else list(table)
    if not pairs:
        raise EmptyTable("scan table has no optimal pairs")
    pairs = sorted(pairs)
    picks = []
    prev_k, prev_r = None, None
    for k, r in pairs:
        if not (prev_r == r and prev_k == k - 1):
            picks.append((k, r))
        prev_k, prev_r = k, r
    return sorted(picks, key=lambda kr: (kr[1], kr[0]))
