"""Level-set thresholding by the scale-invariant dynamic Cheeger ratio (2-D).

For a field ``u`` on a regular grid and a map ``T`` sampled at the grid nodes,
every level set ``Gamma = {u = tau}`` splits the domain into ``M1 = {u > tau}``
and ``M2 = {u <= tau}``.  The ratio

    h(Gamma) = (len(Gamma) + len(T(Gamma))) / (2 * sqrt(min(area(M1), area(M2))))

is evaluated on a sweep of levels and the minimising level is returned.
Level sets come from marching squares with linear interpolation along cell
edges; ambiguous (saddle) cells are resolved by comparing the mean of the four
corners with ``tau``.  Only the contour itself is measured: pieces of the
domain boundary enclosing ``M1`` do not count towards ``len(Gamma)``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DegenerateField",
    "GridField",
    "CheegerResult",
    "marching_squares",
    "level_set_measures",
    "cheeger_ratio",
    "cheeger_threshold",
    "join_segments",
]


class DegenerateField(ValueError):
    pass


@dataclass
class GridField:
    """Scalar field on a regular ``ny x nx`` node grid.

    ``values[j, i]`` sits at ``(x0 + i*dx, y0 + j*dy)``.  With ``periodic_x``
    the nodes cover ``[x0, x1)`` and the column at ``x1`` is the column at
    ``x0``; otherwise they cover ``[x0, x1]`` inclusive.  ``image_points`` has
    shape ``(ny, nx, 2)`` and holds ``T(x)`` for every node; when the image is
    itself x-periodic with period ``image_period_x`` the interpolation
    unwraps it cell by cell.
    """

    values: np.ndarray
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0
    periodic_x: bool = False
    image_points: np.ndarray | None = None
    image_period_x: float | None = None

    def __post_init__(self):
        u = np.asarray(self.values, dtype=float)
        if u.ndim != 2 or min(u.shape) < 2:
            raise ValueError("values must be a 2-D grid with nx, ny >= 2")
        if not np.all(np.isfinite(u)):
            raise ValueError("field values must be finite")
        self.values = u
        if self.image_points is not None:
            ip = np.asarray(self.image_points, dtype=float)
            if ip.shape != u.shape + (2,):
                raise ValueError(
                    f"image_points must have shape {u.shape + (2,)}, got {ip.shape}"
                )
            self.image_points = ip
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("empty domain")

    @property
    def ny(self):
        return self.values.shape[0]

    @property
    def nx(self):
        return self.values.shape[1]

    @property
    def dx(self):
        n = self.nx if self.periodic_x else self.nx - 1
        return (self.x1 - self.x0) / n

    @property
    def dy(self):
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def node_coordinates(self):
        xs = self.x0 + self.dx * np.arange(self.nx)
        ys = self.y0 + self.dy * np.arange(self.ny)
        X, Y = np.meshgrid(xs, ys)
        return np.stack([X, Y], axis=-1)

    def identity_map(self):
        """Copy of this field with ``T`` the identity."""
        return GridField(self.values, self.x0, self.x1, self.y0, self.y1,
                         self.periodic_x, self.node_coordinates(),
                         (self.x1 - self.x0) if self.periodic_x else None)

    def scaled(self, c):
        return GridField(c * self.values, self.x0, self.x1, self.y0, self.y1,
                         self.periodic_x, self.image_points, self.image_period_x)

    def _closed(self):
        """Values and image with the periodic seam column appended."""
        u, ip = self.values, self.image_points
        if self.periodic_x:
            u = np.concatenate([u, u[:, :1]], axis=1)
            if ip is not None:
                seam = ip[:, :1].copy()
                if self.image_period_x:
                    seam[..., 0] += self.image_period_x
                ip = np.concatenate([ip, seam], axis=1)
        return u, ip

    @classmethod
    def from_cells(cls, cell_values, x0, x1, y0, y1, refine=4, periodic_x=False):
        """Bilinearly interpolate cell-centred data onto a finer node grid.

        ``cell_values[j, i]`` belongs to the box centred at
        ``(x0 + (i + 1/2) * hx, y0 + (j + 1/2) * hy)``.  The node grid has
        ``refine`` times as many points per direction; nodes outside the ring
        of cell centres take the nearest centre value (or wrap periodically).
        """
        c = np.asarray(cell_values, dtype=float)
        ny, nx = c.shape
        hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
        cx = x0 + hx * (np.arange(nx) + 0.5)
        cy = y0 + hy * (np.arange(ny) + 0.5)
        NX = nx * refine
        NY = ny * refine
        if periodic_x:
            xs = x0 + (x1 - x0) * np.arange(NX) / NX
            cxp = np.concatenate([cx[-1:] - (x1 - x0), cx, cx[:1] + (x1 - x0)])
            cp = np.concatenate([c[:, -1:], c, c[:, :1]], axis=1)
        else:
            xs = np.linspace(x0, x1, NX)
            cxp, cp = cx, c
        ys = np.linspace(y0, y1, NY)
        rows = np.array([np.interp(xs, cxp, row) for row in cp])
        out = np.array([np.interp(ys, cy, col) for col in rows.T]).T
        return cls(out, x0, x1, y0, y1, periodic_x)


# Marching squares tables.  Corners c0..c3 = (0,0), (1,0), (1,1), (0,1);
# edges e0 = c0-c1, e1 = c1-c2, e2 = c3-c2, e3 = c0-c3 (each parametrised
# from its first corner).  Case bit k is set when corner k lies above tau.
_SEGMENTS = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
    6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
    11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}
# saddles: (segments if the centre is above tau, segments otherwise)
_SADDLES = {
    5: ([(0, 1), (2, 3)], [(3, 0), (1, 2)]),
    10: ([(3, 0), (1, 2)], [(0, 1), (2, 3)]),
}
# boundary walk of the above-tau polygon: ("c", k) corner, ("e", k) crossing
_WALK = ["c0", "e0", "c1", "e1", "c2", "e2", "c3", "e3"]
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _edge_points(t):
    """Local coordinates of the crossings on the four edges, shape (n, 4, 2)."""
    n = t.shape[0]
    pts = np.empty((n, 4, 2))
    pts[:, 0] = np.stack([t[:, 0], np.zeros(n)], axis=1)
    pts[:, 1] = np.stack([np.ones(n), t[:, 1]], axis=1)
    pts[:, 2] = np.stack([t[:, 2], np.ones(n)], axis=1)
    pts[:, 3] = np.stack([np.zeros(n), t[:, 3]], axis=1)
    return pts


def _shoelace(poly):
    """Polygon areas for an (n, k, 2) stack of vertex lists."""
    x, y = poly[..., 0], poly[..., 1]
    return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1))


@dataclass
class _Cells:
    """Cells crossed by a level set, in local coordinates."""

    ii: np.ndarray
    jj: np.ndarray
    seg_cell: np.ndarray      # index into ii/jj for each segment
    seg_edges: np.ndarray     # (nseg, 2) edge ids
    points: np.ndarray        # (ncell, 4, 2) local crossing coordinates
    partial_area: np.ndarray  # above-tau area fraction of each crossed cell
    full_cells: int           # number of cells entirely above tau


def _march(u, tau):
    v0 = u[:-1, :-1]
    v1 = u[:-1, 1:]
    v2 = u[1:, 1:]
    v3 = u[1:, :-1]
    case = ((v0 > tau).astype(np.int8) | ((v1 > tau) << 1) | ((v2 > tau) << 2)
            | ((v3 > tau) << 3))
    full = int(np.count_nonzero(case == 15))
    jj, ii = np.nonzero((case != 0) & (case != 15))
    cs = case[jj, ii]
    a = np.stack([v0[jj, ii], v1[jj, ii], v2[jj, ii], v3[jj, ii]], axis=1)
    starts = a[:, [0, 1, 3, 0]]
    ends = a[:, [1, 2, 2, 3]]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (tau - starts) / (ends - starts)
    t = np.clip(np.nan_to_num(t, nan=0.5), 0.0, 1.0)
    pts = _edge_points(t)
    centre_above = a.mean(axis=1) > tau

    seg_cell, seg_edges = [], []
    area = np.zeros(len(cs))
    above = (a > tau)
    for c in np.unique(cs):
        sel = np.flatnonzero(cs == c)
        if c in _SADDLES:
            conn, sep = _SADDLES[c]
            for mask, segs in ((centre_above[sel], conn), (~centre_above[sel], sep)):
                s = sel[mask]
                for e in segs:
                    seg_cell.append(s)
                    seg_edges.append(np.tile(e, (s.size, 1)))
        else:
            for e in _SEGMENTS[c]:
                seg_cell.append(sel)
                seg_edges.append(np.tile(e, (sel.size, 1)))
        # polygon of the above-tau part walked along the cell boundary
        verts = []
        for tok in _WALK:
            k = int(tok[1])
            if tok[0] == "c":
                if above[sel[0], k]:
                    verts.append(np.broadcast_to(_CORNERS[k], (sel.size, 2)))
            else:
                e0, e1 = {0: (0, 1), 1: (1, 2), 2: (3, 2), 3: (0, 3)}[k]
                if above[sel[0], e0] != above[sel[0], e1]:
                    verts.append(pts[sel, k])
        area[sel] = _shoelace(np.stack(verts, axis=1))
        if c in _SADDLES:
            # separated saddles: the above part is two corner triangles
            s = sel[~centre_above[sel]]
            if s.size:
                hi = (0, 2) if c == 5 else (1, 3)
                tri = np.zeros(s.size)
                for k in hi:
                    ea, eb = {0: (0, 3), 1: (0, 1), 2: (1, 2), 3: (2, 3)}[k]
                    tri += _shoelace(np.stack(
                        [np.broadcast_to(_CORNERS[k], (s.size, 2)), pts[s, ea], pts[s, eb]],
                        axis=1))
                area[s] = tri
    if seg_cell:
        seg_cell = np.concatenate(seg_cell)
        seg_edges = np.concatenate(seg_edges)
    else:
        seg_cell = np.zeros(0, dtype=int)
        seg_edges = np.zeros((0, 2), dtype=int)
    return _Cells(ii, jj, seg_cell, seg_edges, pts, area, full)


def _bilinear(corners, st):
    """Bilinear interpolation of corner vectors (n, 4, 2) at local points (n, 2)."""
    s, t = st[:, 0:1], st[:, 1:2]
    return ((1 - s) * (1 - t) * corners[:, 0] + s * (1 - t) * corners[:, 1]
            + s * t * corners[:, 2] + (1 - s) * t * corners[:, 3])


@dataclass
class LevelSetMeasures:
    tau: float
    length: float
    image_length: float
    area_above: float
    area_below: float
    segments: np.ndarray = field(repr=False)
    image_segments: np.ndarray | None = field(default=None, repr=False)


def level_set_measures(grid, tau):
    """Contour length, image contour length and the two enclosed areas at ``tau``."""
    u, ip = grid._closed()
    cells = _march(u, tau)
    dx, dy = grid.dx, grid.dy
    cell_area = dx * dy
    area_above = (cells.full_cells + cells.partial_area.sum()) * cell_area
    area_below = grid.area - area_above

    p = cells.points[cells.seg_cell]
    k = np.arange(len(cells.seg_cell))
    a_loc = p[k, cells.seg_edges[:, 0]]
    b_loc = p[k, cells.seg_edges[:, 1]]
    ii = cells.ii[cells.seg_cell]
    jj = cells.jj[cells.seg_cell]
    origin = np.stack([grid.x0 + ii * dx, grid.y0 + jj * dy], axis=1)
    scale = np.array([dx, dy])
    segs = np.stack([origin + a_loc * scale, origin + b_loc * scale], axis=1)
    length = float(np.sum(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)))

    image_length = float("nan")
    img = None
    if ip is not None:
        corners = np.stack([ip[jj, ii], ip[jj, ii + 1], ip[jj + 1, ii + 1], ip[jj + 1, ii]],
                           axis=1)
        if grid.image_period_x:
            L = grid.image_period_x
            ref = corners[:, :1, 0]
            corners = corners.copy()
            corners[..., 0] -= L * np.round((corners[..., 0] - ref) / L)
        img = np.stack([_bilinear(corners, a_loc), _bilinear(corners, b_loc)], axis=1)
        image_length = float(np.sum(np.linalg.norm(img[:, 1] - img[:, 0], axis=1)))
    return LevelSetMeasures(float(tau), length, image_length, float(area_above),
                            float(area_below), segs, img)


def cheeger_ratio(measures, d=2):
    """Scale-invariant dynamic Cheeger ratio from :func:`level_set_measures` output."""
    if d != 2:
        raise NotImplementedError("only d = 2 is supported")
    small = min(measures.area_above, measures.area_below)
    if small <= 0 or measures.length <= 0:
        return float("nan")
    img = measures.image_length
    if not np.isfinite(img):
        img = measures.length
    return (measures.length + img) / (2.0 * small ** ((d - 1) / d))


def marching_squares(grid, tau):
    """Level-set segments of ``grid`` at ``tau`` as an ``(n, 2, 2)`` array."""
    return level_set_measures(grid, tau).segments


def join_segments(segments, decimals=10):
    """Chain segments that share endpoints into polylines (list of (m, 2) arrays).

    Closed contours come back with the first point repeated at the end.
    """
    segs = np.asarray(segments, dtype=float)
    if segs.size == 0:
        return []
    keys = [tuple(np.round(pt, decimals)) for pt in segs.reshape(-1, 2)]
    adj = {}
    for n in range(len(segs)):
        for end in (0, 1):
            adj.setdefault(keys[2 * n + end], []).append((n, end))
    used = np.zeros(len(segs), dtype=bool)

    def extend(key):
        pts = []
        while True:
            nxt = [(m, e) for m, e in adj[key] if not used[m]]
            if not nxt:
                return pts
            m, e = nxt[0]
            used[m] = True
            pts.append(segs[m, 1 - e])
            key = keys[2 * m + 1 - e]

    lines = []
    for n in range(len(segs)):
        if used[n]:
            continue
        used[n] = True
        fwd = extend(keys[2 * n + 1])
        back = extend(keys[2 * n])
        lines.append(np.array(back[::-1] + [segs[n, 0], segs[n, 1]] + fwd))
    return lines


@dataclass
class CheegerResult:
    tau: float
    h: float
    levels: np.ndarray
    h_values: np.ndarray
    contour: np.ndarray = field(repr=False)
    image_contour: np.ndarray | None = field(repr=False)
    flat_interval: tuple

    def polylines(self):
        return join_segments(self.contour)


def cheeger_threshold(grid, n_levels=256, d=2, flat_rtol=0.01, threads=1):
    """Sweep ``n_levels`` thresholds and pick the one minimising the ratio.

    Levels are uniform in the open interval ``(min u, max u)``.  Levels whose
    contour is empty or encloses no area give ``nan`` and are ignored.  Ties
    go to the smaller level.  ``flat_interval`` is the range of levels whose
    ratio is within ``flat_rtol`` of the minimum.
    """
    if d != 2:
        raise NotImplementedError("only d = 2 is supported")
    if grid.image_points is None:
        grid = grid.identity_map()
    u = grid.values
    lo, hi = float(u.min()), float(u.max())
    if hi - lo < 1e-12:
        raise DegenerateField("field is constant")
    levels = lo + (hi - lo) * np.arange(1, n_levels + 1) / (n_levels + 1)

    def ratio(t):
        return cheeger_ratio(level_set_measures(grid, t), d)

    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            h = np.array(list(pool.map(ratio, levels)))
    else:
        h = np.array([ratio(t) for t in levels])
    if not np.any(np.isfinite(h)):
        raise DegenerateField("no level produced a valid contour")
    best = int(np.nanargmin(h))
    ok = np.isfinite(h) & (h <= h[best] * (1 + flat_rtol))
    flat = (float(levels[ok].min()), float(levels[ok].max()))
    m = level_set_measures(grid, levels[best])
    return CheegerResult(float(levels[best]), float(h[best]), levels, h,
                         m.segments, m.image_segments, flat)
