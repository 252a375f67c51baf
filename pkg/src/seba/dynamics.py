"""Desk-scale generators of eigenbasis fixtures.

* the Bickley jet with a fixed-step RK4 flow map and an Ulam discretisation of
  its transfer operator over a finite time window;
* radius graphs on point clouds (Laplace type) including a disk with four
  attached blobs;
* block-structured Markov chains with a controllable leak between blocks.

Units for the Bickley jet are megametres and days.  Random sampling uses
``numpy.random.default_rng`` (PCG64) seeded explicitly, so fixtures are
reproducible across platforms.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .basis import EigenBasis
from .cheeger import GridField
from .linalg import symmetric_eig

__all__ = [
    "Disconnected",
    "BickleyFlow",
    "UlamOperator",
    "flow_map",
    "ulam_build",
    "singular_basis",
    "bickley_basis",
    "bickley_field",
    "normalized_operator",
    "graph_laplacian",
    "graph_laplacian_demo",
    "disk_with_blobs",
    "block_markov_matrix",
    "block_markov_demo",
]

SECONDS_PER_DAY = 86400.0


class Disconnected(ValueError):
    pass


@dataclass(frozen=True)
class BickleyFlow:
    """Bickley jet: a meandering zonal jet with three travelling waves.

    The stream function is
    ``psi = -U0 L0 tanh(y/L0) + sum_i A_i U0 L0 sech^2(y/L0) cos(k_i (x - c_i t))``
    with ``U0 = 62.66 m/s``, ``L0 = 1770 km``, ``r_e = 6371 km`` and wave
    speeds given as multiples of ``U0``.  Lengths are in Mm, time in days;
    the domain is ``[0, 20] x [-3, 3]`` and x-periodic.
    """

    U0_ms: float = 62.66
    L0: float = 1.770
    r_e: float = 6.371
    A: tuple = (0.0075, 0.15, 0.3)
    c_factors: tuple = (0.1446, 0.205, 0.461)
    wavenumbers: tuple = (2.0, 4.0, 6.0)
    x_range: tuple = (0.0, 20.0)
    y_range: tuple = (-3.0, 3.0)
    t_range: tuple = (0.0, 40.0)

    @property
    def U0(self):
        """Jet speed in Mm/day."""
        return self.U0_ms * SECONDS_PER_DAY / 1e6

    @property
    def c(self):
        return tuple(f * self.U0 for f in self.c_factors)

    @property
    def k(self):
        return tuple(n / self.r_e for n in self.wavenumbers)

    @property
    def period(self):
        return self.x_range[1] - self.x_range[0]

    def stream_function(self, x, y, t):
        x, y = np.asarray(x, float), np.asarray(y, float)
        sech2 = 1.0 / np.cosh(y / self.L0) ** 2
        psi = -self.U0 * self.L0 * np.tanh(y / self.L0)
        for A, k, c in zip(self.A, self.k, self.c):
            psi = psi + A * self.U0 * self.L0 * sech2 * np.cos(k * (x - c * t))
        return psi

    def velocity(self, x, y, t):
        """``(u, v) = (-dpsi/dy, dpsi/dx)`` from the closed-form derivatives."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        th = np.tanh(y / self.L0)
        sech2 = 1.0 - th * th
        U0, L0 = self.U0, self.L0
        if self.wavenumbers == (2.0, 4.0, 6.0):
            # harmonics of one base angle: one cos/sin pair per call
            a = self.k[0] * x
            c1, s1 = np.cos(a), np.sin(a)
            c2, s2 = c1 * c1 - s1 * s1, 2.0 * s1 * c1
            c3, s3 = c2 * c1 - s2 * s1, s2 * c1 + c2 * s1
            wave = 0.0
            dwave = 0.0
            for A, k, c, ck, sk in zip(self.A, self.k, self.c, (c1, c2, c3), (s1, s2, s3)):
                w = k * c * t
                cw, sw = np.cos(w), np.sin(w)
                # cos(kx - w) and sin(kx - w)
                wave = wave + A * (ck * cw + sk * sw)
                dwave = dwave - A * k * (sk * cw - ck * sw)
        else:
            wave = 0.0
            dwave = 0.0
            for A, k, c in zip(self.A, self.k, self.c):
                phase = k * (x - c * t)
                wave = wave + A * np.cos(phase)
                dwave = dwave - A * k * np.sin(phase)
        u = U0 * sech2 * (1.0 + 2.0 * th * wave)
        v = U0 * L0 * sech2 * dwave
        return u, v

    def periodic_velocity(self, x, y, t):
        x0, _ = self.x_range
        return self.velocity(x0 + np.mod(x - x0, self.period), y, t)


def flow_map(velocity, points, t0, t1, step, period_x=None, x0=0.0, wrap=True):
    """Advect ``points`` (n, 2) from ``t0`` to ``t1`` with classical RK4.

    The step is adjusted down to divide ``t1 - t0`` evenly.  With
    ``period_x`` the velocity is evaluated at ``x`` reduced into
    ``[x0, x0 + period_x)`` and, if ``wrap``, the output is reduced too.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    pts = np.array(points, dtype=float, copy=True)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    span = t1 - t0
    n = max(1, int(math.ceil(abs(span) / step - 1e-12)))
    h = span / n

    if period_x is not None:
        def f(x, y, t):
            return velocity(x0 + np.mod(x - x0, period_x), y, t)
    else:
        f = velocity

    x, y = pts[:, 0], pts[:, 1]
    t = t0
    for _ in range(n):
        k1x, k1y = f(x, y, t)
        k2x, k2y = f(x + 0.5 * h * k1x, y + 0.5 * h * k1y, t + 0.5 * h)
        k3x, k3y = f(x + 0.5 * h * k2x, y + 0.5 * h * k2y, t + 0.5 * h)
        k4x, k4y = f(x + h * k3x, y + h * k3y, t + h)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        t = t0 + (_ + 1) * h
    if period_x is not None and wrap:
        x = x0 + np.mod(x - x0, period_x)
    return np.column_stack([x, y])


@dataclass
class UlamOperator:
    """Box-to-box transition matrix of a flow over a finite time window.

    ``P[i, j]`` is the fraction of sample points from box ``i`` that land in
    box ``j``.  Boxes are numbered row-major: ``i = iy * nx + ix``.  ``L`` is
    ``D_p^{1/2} P D_q^{-1/2}`` with ``p`` the (uniform) box measure and
    ``q = p P`` its image, which makes the leading singular value exactly 1
    with left singular vector ``sqrt(p)``.
    """

    nx: int
    ny: int
    x_range: tuple
    y_range: tuple
    P: np.ndarray
    samples_per_box: int
    L: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.L = normalized_operator(self.P)

    @property
    def n_boxes(self):
        return self.nx * self.ny

    def box_centers(self):
        hx = (self.x_range[1] - self.x_range[0]) / self.nx
        hy = (self.y_range[1] - self.y_range[0]) / self.ny
        xs = self.x_range[0] + hx * (np.arange(self.nx) + 0.5)
        ys = self.y_range[0] + hy * (np.arange(self.ny) + 0.5)
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])


def normalized_operator(P, p=None):
    """``L = D_p^{1/2} P D_q^{-1/2}`` with ``q = p P``; columns with ``q = 0`` are zero."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    p = np.full(n, 1.0 / n) if p is None else np.asarray(p, dtype=float)
    q = p @ P
    inv = np.zeros_like(q)
    inv[q > 0] = 1.0 / np.sqrt(q[q > 0])
    return np.sqrt(p)[:, None] * P * inv[None, :]


def _box_index(pts, nx, ny, x_range, y_range, periodic_x):
    hx = (x_range[1] - x_range[0]) / nx
    hy = (y_range[1] - y_range[0]) / ny
    ix = np.floor((pts[:, 0] - x_range[0]) / hx).astype(int)
    iy = np.floor((pts[:, 1] - y_range[0]) / hy).astype(int)
    if periodic_x:
        ix = np.mod(ix, nx)
    else:
        ix = np.clip(ix, 0, nx - 1)
    # points leaving through y are kept in the nearest boundary row
    iy = np.clip(iy, 0, ny - 1)
    return iy * nx + ix


def ulam_build(flow=None, nx=120, ny=36, t0=None, t1=None, samples_per_box=100,
               seed=0, step=0.1, threads=None, velocity=None, x_range=None,
               y_range=None, periodic_x=True):
    """Ulam matrix for ``flow`` (a :class:`BickleyFlow` by default).

    ``samples_per_box`` uniform points are drawn in every box from a PCG64
    generator seeded with ``seed``, advected with :func:`flow_map` and
    binned.  Advection is split into chunks over ``threads`` workers; the
    result does not depend on the number of threads.  A bare ``velocity``
    callable may be given instead of ``flow`` together with the domain.
    """
    if samples_per_box < 1:
        raise ValueError("samples_per_box must be >= 1")
    if velocity is None:
        flow = flow or BickleyFlow()
        velocity = flow.velocity
        x_range = x_range or flow.x_range
        y_range = y_range or flow.y_range
        t0 = flow.t_range[0] if t0 is None else t0
        t1 = flow.t_range[1] if t1 is None else t1
    if x_range is None or y_range is None or t0 is None or t1 is None:
        raise ValueError("domain and time window are required with a bare velocity")
    rng = np.random.default_rng(seed)
    n = nx * ny
    hx = (x_range[1] - x_range[0]) / nx
    hy = (y_range[1] - y_range[0]) / ny
    iy, ix = np.divmod(np.repeat(np.arange(n), samples_per_box), nx)
    u = rng.random((n * samples_per_box, 2))
    pts = np.column_stack([x_range[0] + (ix + u[:, 0]) * hx,
                           y_range[0] + (iy + u[:, 1]) * hy])
    period = (x_range[1] - x_range[0]) if periodic_x else None

    def advect(chunk):
        return flow_map(velocity, chunk, t0, t1, step, period_x=period, x0=x_range[0])

    chunks = np.array_split(pts, max(1, min(len(pts) // 20000, 64)))
    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            images = np.concatenate(list(pool.map(advect, chunks)))
    else:
        images = np.concatenate([advect(c) for c in chunks])
    src = np.repeat(np.arange(n), samples_per_box)
    dst = _box_index(images, nx, ny, x_range, y_range, periodic_x)
    P = np.zeros((n, n))
    np.add.at(P, (src, dst), 1.0)
    P /= samples_per_box
    return UlamOperator(nx, ny, tuple(x_range), tuple(y_range), P, samples_per_box)


def singular_basis(L, r, side="left"):
    """Leading ``r`` singular values and vectors of ``L``.

    Left vectors come from the eigendecomposition of ``L L^T`` and right
    vectors from ``L^T L``.  Returns ``(sigma, U)`` with ``U`` orthonormal.
    """
    L = np.asarray(L, dtype=float)
    G = L @ L.T if side == "left" else L.T @ L
    w, X = symmetric_eig(G, k=r)
    sigma = np.sqrt(np.clip(w, 0.0, None))
    return sigma, X[:, :r]


def bickley_basis(r=15, nx=120, ny=36, samples_per_box=100, seed=0, step=0.1,
                  threads=None, flow=None):
    """Markov-type basis of the Bickley jet from left singular vectors of ``L``.

    Returns ``(EigenBasis, UlamOperator)``; eigenvalues are the singular values.
    """
    flow = flow or BickleyFlow()
    op = ulam_build(flow, nx, ny, samples_per_box=samples_per_box, seed=seed,
                    step=step, threads=threads)
    sigma, U = singular_basis(op.L, r)
    sigma = np.minimum(sigma, 1.0)
    return EigenBasis(U, sigma, "markov", 2), op


def bickley_field(column, op, flow=None, refine=2, step=0.1):
    """Grid field of one box-valued vector with flow-mapped nodes attached.

    ``column`` holds one value per Ulam box (row-major, ``ny x nx``).  It is
    interpolated onto a node grid ``refine`` times finer, and every node is
    advected over the flow's time window to supply ``image_points``.
    """
    flow = flow or BickleyFlow()
    vals = np.asarray(column, dtype=float).reshape(op.ny, op.nx)
    (x0, x1), (y0, y1) = op.x_range, op.y_range
    g = GridField.from_cells(vals, x0, x1, y0, y1, refine=refine, periodic_x=True)
    nodes = g.node_coordinates().reshape(-1, 2)
    t0, t1 = flow.t_range
    img = flow_map(flow.velocity, nodes, t0, t1, step, period_x=x1 - x0, x0=x0)
    g.image_points = img.reshape(g.values.shape + (2,))
    g.image_period_x = x1 - x0
    return g


def graph_laplacian(points, radius):
    """Unnormalized radius-graph Laplacian ``D - W`` with unit edge weights."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    tree = cKDTree(pts)
    pairs = tree.query_pairs(radius * (1 + 1e-12), output_type="ndarray")
    W = np.zeros((n, n))
    if len(pairs):
        W[pairs[:, 0], pairs[:, 1]] = 1.0
        W[pairs[:, 1], pairs[:, 0]] = 1.0
    return np.diag(W.sum(axis=1)) - W


def graph_laplacian_demo(points, radius, r=None, zero_tol=1e-9):
    """Leading eigenpairs of a radius graph as a Neumann-type basis.

    Eigenvalues are negated so they are ``0 = lambda_1 >= lambda_2 >= ...``.

    Raises
    ------
    Disconnected
        If more than one eigenvalue is zero to within ``zero_tol`` times the
        largest degree.
    """
    Lap = graph_laplacian(points, radius)
    n = Lap.shape[0]
    w, X = symmetric_eig(-Lap)
    scale = max(1.0, float(np.max(np.diag(Lap))))
    nzero = int(np.sum(np.abs(w) <= zero_tol * scale))
    if nzero > 1:
        raise Disconnected(f"graph has {nzero} connected components at radius {radius}")
    r = n if r is None else r
    w = w[:r].copy()
    w[0] = 0.0 if abs(w[0]) <= zero_tol * scale else w[0]
    V = X[:, :r]
    return EigenBasis(V, np.minimum(w, 0.0), "laplace_neumann", 2)


def disk_with_blobs(spacing=0.05, disk_radius=1.0, blob_radius=0.3,
                    blob_distance=1.45, channel_width=0.1, seed=0, jitter=0.2):
    """Jittered grid sample of a disk with four blobs attached by thin channels.

    Returns ``(points, labels)`` with label 0 for the disk and channels and
    1..4 for the blobs (east, north, west, south).
    """
    rng = np.random.default_rng(seed)
    ext = blob_distance + blob_radius + spacing
    g = np.arange(-ext, ext + spacing / 2, spacing)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts + jitter * spacing * rng.uniform(-1, 1, pts.shape)
    labels = np.full(len(pts), -1)
    rr = np.hypot(pts[:, 0], pts[:, 1])
    labels[rr <= disk_radius] = 0
    centres = blob_distance * np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], float)
    for b, c in enumerate(centres, 1):
        d = np.hypot(*(pts - c).T)
        labels[d <= blob_radius] = b
        along = pts @ (c / blob_distance)
        across = np.abs(pts @ (np.array([-c[1], c[0]]) / blob_distance))
        chan = (across <= channel_width / 2) & (along > 0) & (along < blob_distance) & (labels < 0)
        labels[chan] = 0
    keep = labels >= 0
    return pts[keep], labels[keep]


def block_markov_matrix(block_sizes, eps, seed=0):
    """Row-stochastic matrix with ``1 - eps`` of each row's mass inside its block.

    Within-block and off-block weights are drawn uniformly from ``[0.5, 1.5)``.
    """
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 0.5)")
    sizes = [int(s) for s in block_sizes]
    if min(sizes) < 1:
        raise ValueError("block sizes must be positive")
    rng = np.random.default_rng(seed)
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    W = rng.uniform(0.5, 1.5, (n, n))
    same = labels[:, None] == labels[None, :]
    inside = np.where(same, W, 0.0)
    outside = np.where(same, 0.0, W)
    P = (1 - eps) * inside / inside.sum(axis=1, keepdims=True)
    if len(sizes) > 1 and eps > 0:
        P += eps * outside / outside.sum(axis=1, keepdims=True)
    return P, labels


def block_markov_demo(block_sizes, eps, seed=0, r=None):
    """Leading ``k`` left singular vectors of a block Markov chain.

    ``k`` defaults to the number of blocks.  Returns ``(EigenBasis, labels)``
    where ``labels`` gives the 0-based block of each state.
    """
    P, labels = block_markov_matrix(block_sizes, eps, seed)
    k = len(block_sizes) if r is None else r
    sigma, U = singular_basis(normalized_operator(P), k)
    return EigenBasis(U, np.minimum(sigma, 1.0), "markov", 1), labels
