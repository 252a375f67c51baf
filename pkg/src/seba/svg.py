"""Minimal SVG plots for the command-line pipeline.

Every public function takes CSV paths written earlier in the run and an output
path, so the figures never feed back into numeric results.  Output is plain
text with fixed number formatting and diffs cleanly between runs.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .io import read_csv_table

__all__ = [
    "Figure",
    "spectrum_plot",
    "min_value_plot",
    "rmin_plot",
    "heatmap_plot",
    "cheeger_plot",
]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"]


def _f(x):
    return f"{x:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = np.ceil(lo / step) * step
    ticks = np.arange(start, hi + step * 1e-9, step)
    # snap rounding residue such as -1e-17 to an exact zero
    ticks[np.abs(ticks) < step * 1e-9] = 0.0
    return [float(t) + 0.0 for t in ticks]


def _label(t):
    return f"{t + 0.0:.6g}"


class Figure:
    """One panel with linear axes; drawing calls take data coordinates."""

    def __init__(self, xlim, ylim, width=640, height=420, title="", xlabel="",
                 ylabel="", margin=(60, 20, 40, 50), clip_id="plot", headroom=0.04):
        self.clip_id = clip_id
        self.width, self.height = width, height
        self.left, self.right, self.top, self.bottom = margin
        self.xlim = self._pad(xlim)
        lo, hi = self._pad(ylim)
        extra = headroom * (hi - lo)
        self.ylim = (lo - extra, hi + extra)
        self.parts = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    @staticmethod
    def _pad(lim):
        lo, hi = float(lim[0]), float(lim[1])
        if hi - lo <= 0:
            d = abs(lo) * 0.05 or 0.5
            return lo - d, hi + d
        return lo, hi

    def sx(self, x):
        w = self.width - self.left - self.right
        return self.left + (np.asarray(x, float) - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * w

    def sy(self, y):
        h = self.height - self.top - self.bottom
        return self.top + (self.ylim[1] - np.asarray(y, float)) / (self.ylim[1] - self.ylim[0]) * h

    def line(self, x, y, color="#1f77b4", width=1.5, dash=None):
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(self.sx(x), self.sy(y)))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra} points="{pts}"/>')

    def markers(self, x, y, color="#1f77b4", shape="circle", size=3.5):
        for a, b in zip(self.sx(x), self.sy(y)):
            if shape == "diamond":
                s = size * 1.4
                pts = f"{_f(a)},{_f(b - s)} {_f(a + s)},{_f(b)} {_f(a)},{_f(b + s)} {_f(a - s)},{_f(b)}"
                self.parts.append(f'<polygon fill="{color}" stroke="black" '
                                  f'stroke-width="0.5" points="{pts}"/>')
            else:
                self.parts.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="{size}" fill="{color}"/>')

    def rect(self, x, y, w, h, fill):
        x0, x1 = self.sx([x, x + w])
        y0, y1 = self.sy([y + h, y])
        self.parts.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0 + 0.05)}" '
                          f'height="{_f(y1 - y0 + 0.05)}" fill="{fill}"/>')

    def text(self, x, y, s, size=11, anchor="start", color="black"):
        self.parts.append(f'<text x="{_f(self.sx(x))}" y="{_f(self.sy(y))}" font-size="{size}" '
                          f'text-anchor="{anchor}" fill="{color}">{escape(s)}</text>')

    def legend(self, entries):
        x = self.width - self.right - 130
        for i, (label, color) in enumerate(entries):
            y = self.top + 14 + 14 * i
            self.parts.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}" '
                              f'stroke="{color}" stroke-width="2"/>')
            self.parts.append(f'<text x="{x + 22}" y="{y}" font-size="10">{escape(label)}</text>')

    def _axes(self):
        L, T = self.left, self.top
        R, B = self.width - self.right, self.height - self.bottom
        out = [f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>']
        for t in _ticks(*self.xlim):
            px = _f(self.sx(t))
            out.append(f'<line x1="{px}" y1="{B}" x2="{px}" y2="{B + 4}" stroke="black"/>')
            out.append(f'<text x="{px}" y="{B + 16}" font-size="10" text-anchor="middle">{_label(t)}</text>')
        for t in _ticks(*self.ylim):
            py = _f(self.sy(t))
            out.append(f'<line x1="{L - 4}" y1="{py}" x2="{L}" y2="{py}" stroke="black"/>')
            out.append(f'<text x="{L - 6}" y="{py}" font-size="10" text-anchor="end" '
                       f'dominant-baseline="middle">{_label(t)}</text>')
        if self.title:
            out.append(f'<text x="{(L + R) / 2:.1f}" y="{T - 6}" font-size="13" '
                       f'text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{(L + R) / 2:.1f}" y="{self.height - 8}" font-size="11" '
                       f'text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cy = (T + B) / 2
            out.append(f'<text x="14" y="{cy:.1f}" font-size="11" text-anchor="middle" '
                       f'transform="rotate(-90 14 {cy:.1f})">{escape(self.ylabel)}</text>')
        return out

    def fragment(self):
        """Panel content without the enclosing ``<svg>`` element."""
        cid = self.clip_id
        clip = (f'<clipPath id="{cid}"><rect x="{self.left}" y="{self.top}" '
                f'width="{self.width - self.left - self.right}" '
                f'height="{self.height - self.top - self.bottom}"/></clipPath>')
        body = [f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
                f"<defs>{clip}</defs>", f'<g clip-path="url(#{cid})">']
        body.extend(self.parts)
        body.append("</g>")
        body.extend(self._axes())
        return "\n".join(body)

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head, self.fragment(), "</svg>"]) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())


def _columns(path):
    return read_csv_table(path)


def _floats(xs):
    return np.asarray(xs, dtype=float)


def spectrum_plot(spectrum_csv, drops_csv, svg_path, n_marked=2, title="Rescaled spectrum"):
    """Rescaled eigenvalues against ``r`` with the largest drops highlighted."""
    sp = _columns(spectrum_csv)
    r, v = _floats(sp["r"]), _floats(sp["value"])
    drops = _columns(drops_csv)
    dr = _floats(drops.get("r", []))[:n_marked]
    fig = Figure((r.min() - 0.5, r.max() + 0.5), (v.min(), v.max()), title=title,
                 xlabel="r", ylabel="rescaled eigenvalue")
    fig.line(r, v, color=PALETTE[0])
    fig.markers(r, v, color=PALETTE[0])
    for d in dr:
        i = int(np.flatnonzero(r == d)[0])
        fig.markers([r[i]], [v[i]], color=PALETTE[1], shape="diamond", size=5)
        fig.text(r[i], v[i], f"  r={int(d)}", size=10, color=PALETTE[1])
    fig.save(svg_path)


def min_value_plot(scan_csv, rmin_csv, svg_path, title="Stacked minimum values"):
    """``Min(S^(r), k)`` against ``r``, one line per ``k``, diamonds at ``r_min(k)``."""
    cols = _columns(scan_csv)
    r, k, val = _floats(cols["r"]).astype(int), _floats(cols["k"]).astype(int), _floats(cols["minval"])
    rm = _columns(rmin_csv)
    rmin = dict(zip(_floats(rm["k"]).astype(int), _floats(rm["r_min"]).astype(int)))
    fig = Figure((r.min() - 0.5, r.max() + 0.5), (min(0.0, val.min()), val.max()),
                 title=title, xlabel="r", ylabel="Min(S, k)")
    for kk in sorted(set(k.tolist())):
        sel = k == kk
        color = PALETTE[(kk - 1) % len(PALETTE)]
        fig.line(r[sel], val[sel], color=color, width=1.0)
        if kk in rmin:
            at = sel & (r == rmin[kk])
            fig.markers(r[at], val[at], color=color, shape="diamond", size=4.5)
    fig.save(svg_path)


def rmin_plot(rmin_csv, svg_path, picks_csv=None, title="r_min(k)"):
    """Step plot of ``r_min(k)``; selected ``(k, r)`` pairs are circled."""
    rm = _columns(rmin_csv)
    k, r = _floats(rm["k"]), _floats(rm["r_min"])
    fig = Figure((k.min() - 0.5, k.max() + 0.5), (0, r.max() + 1), title=title,
                 xlabel="k", ylabel="r_min(k)")
    fig.line(k, k, color="#999999", width=1.0, dash="4,3")
    fig.line(k, r, color=PALETTE[0])
    fig.markers(k, r, color=PALETTE[0])
    if picks_csv is not None:
        pk = _columns(picks_csv)
        fig.markers(_floats(pk["k"]), _floats(pk["r"]), color=PALETTE[1],
                    shape="diamond", size=5)
    fig.save(svg_path)


def _colormap(t):
    # white to dark blue
    t = float(np.clip(t, 0.0, 1.0))
    lo, hi = np.array([255, 255, 255]), np.array([8, 48, 107])
    c = np.rint(lo + t * (hi - lo)).astype(int)
    return f"#{c[0]:02x}{c[1]:02x}{c[2]:02x}"


def heatmap_plot(values_csv, svg_path, nx, ny, x_range=(0.0, 1.0), y_range=(0.0, 1.0),
                 column="value", vmin=0.0, vmax=1.0, title="Superposition"):
    """Per-cell rectangles for a row-major ``ny x nx`` vector read from CSV."""
    vals = _floats(_columns(values_csv)[column])
    if vals.size != nx * ny:
        raise ValueError(f"expected {nx * ny} values, found {vals.size}")
    grid = vals.reshape(ny, nx)
    (x0, x1), (y0, y1) = x_range, y_range
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    aspect = (y1 - y0) / (x1 - x0)
    width = 720
    height = int(max(160, min(720, (width - 80) * aspect + 70)))
    fig = Figure((x0, x1), (y0, y1), width=width, height=height, title=title,
                 xlabel="x", ylabel="y", headroom=0.0)
    span = vmax - vmin if vmax > vmin else 1.0
    for j in range(ny):
        for i in range(nx):
            t = (grid[j, i] - vmin) / span
            if t > 0.0:
                fig.rect(x0 + i * hx, y0 + j * hy, hx, hy, _colormap(t))
    fig.save(svg_path)


def cheeger_plot(curve_csv, contour_csv, svg_path, x_range, y_range, tau=None,
                 title="Cheeger ratio"):
    """The ``(tau, h)`` curve beside the chosen contour and its image."""
    cv = _columns(curve_csv)
    t, h = _floats(cv["tau"]), _floats(cv["h"])
    ok = np.isfinite(h)
    left = Figure((t.min(), t.max()), (h[ok].min(), h[ok].max()) if ok.any() else (0, 1),
                  width=420, height=360, title=title, xlabel="tau", ylabel="h")
    left.line(t[ok], h[ok], color=PALETTE[0])
    if tau is not None and ok.any():
        i = int(np.argmin(np.abs(t - tau)))
        left.markers([t[i]], [h[i]], color=PALETTE[1], shape="diamond", size=5)
    ct = _columns(contour_csv)
    right = Figure(x_range, y_range, width=420, height=360, title="Contour",
                   xlabel="x", ylabel="y", clip_id="plot2", headroom=0.0)
    colors = {"contour": PALETTE[0], "image": PALETTE[1]}
    if ct and len(ct.get("x", [])):
        which, line = ct["which"], _floats(ct["line"]).astype(int)
        xs, ys = _floats(ct["x"]), _floats(ct["y"])
        for w, ln in sorted(set(zip(which.tolist(), line.tolist()))):
            sel = (which == w) & (line == ln)
            right.line(xs[sel], ys[sel], color=colors.get(w, "black"), width=1.2)
    right.legend([("contour", colors["contour"]), ("image", colors["image"])])
    doc = (f'<svg xmlns="http://www.w3.org/2000/svg" width="840" height="360" '
           f'viewBox="0 0 840 360">\n<g>\n{left.fragment()}\n</g>\n'
           f'<g transform="translate(420,0)">\n{right.fragment()}\n</g>\n</svg>\n')
    with open(svg_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(doc)
