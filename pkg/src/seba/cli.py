"""``seba`` command-line front end.

Every subcommand reads and writes files in one output directory (``--out``,
defaulting to ``$SEBA_OUT``), so a pipeline is a sequence of calls::

    seba demo bickley --out d/
    seba eigengap --out d/
    seba run --r 8 --out d/
    seba scan --r-max 12 --out d/
    seba threshold --method disjoint --out d/

Options may also come from a ``key=value`` file given with ``--config``
(keys are the long option names with dashes or underscores); flags win over
the file.  The resolved options are written to ``config.<command>.kv``.

Exit codes: 0 success, 1 invalid input or I/O failure, 2 numerical failure,
3 the iteration hit ``--max-iter`` (outputs are still written).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as sio
from . import svg
from .basis import DegenerateColumn, EigenBasis, SebaConfig, normalize_kind, seba
from .cheeger import GridField, cheeger_threshold, join_segments
from .heuristics import scan, select_kr, weyl_rescale
from .linalg import LinalgError, WeightVector, qr_orthonormalize
from .thresholding import (FeatureAssignment, disjoint_support, hard_threshold,
                           manual, max_likelihood, partition_unity, superposition)

__all__ = ["main", "build_parser", "CliError"]

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOT_CONVERGED = 0, 1, 2, 3

KIND_CHOICES = ["neumann", "dirichlet", "markov",
                "laplace_neumann", "laplace_dirichlet"]

# option defaults, applied after the config file
DEFAULTS = {
    "tol": 1e-14,
    "max_iter": 5000,
    "method": "disjoint",
    "levels": 256,
    "seed": 0,
    "samples": 100,
    "nx": 120,
    "ny": 36,
    "step": 0.1,
    "eps": 0.05,
    "blocks": "50,30,20",
    "radius": 0.075,
    "spacing": 0.05,
}


class CliError(Exception):
    """Failure reported as a one-line message with an exit code."""

    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _say(msg):
    print(f"seba: {msg}", file=sys.stderr)


def _threads(n):
    return n if n is not None else (os.cpu_count() or 1)


def _path(cfg, name):
    return os.path.join(cfg["out"], name)


def _read(path, what="input"):
    if not os.path.exists(path):
        raise CliError(f"{what} file not found: {path}")
    try:
        return sio.read_matrix(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _manifest(cfg):
    path = cfg.get("manifest") or _path(cfg, "manifest.kv")
    return sio.read_kv(path) if os.path.exists(path) else {}


def _kind_and_d(cfg, manifest):
    kind = cfg.get("kind") or manifest.get("kind") or "laplace_neumann"
    d = cfg.get("d") or int(manifest.get("d", 2))
    return normalize_kind(kind), int(d)


def _write_config(cfg, command):
    record = {k: v for k, v in cfg.items()
              if v is not None and k not in ("config", "func", "threads", "out")}
    record["command"] = command
    sio.write_kv(_path(cfg, f"config.{command}.kv"), record)


def _eigenvalue_column(path):
    A = _read(path, "eigenvalue")
    if A.shape[1] == 2:
        return A[:, 1]
    if A.shape[1] != 1:
        raise CliError(f"{path}: expected one column of eigenvalues or (r, value) pairs")
    return A[:, 0]


# ---------------------------------------------------------------- commands

def cmd_run(cfg):
    V = _read(cfg.get("input") or _path(cfg, "V.seba1"))
    manifest = _manifest(cfg)
    kind, d = _kind_and_d(cfg, manifest)
    weights = None
    if cfg.get("weights"):
        nu = _read(cfg["weights"], "weights").ravel()
        try:
            weights = WeightVector(nu)
        except ValueError as exc:
            raise CliError(f"{cfg['weights']}: {exc}") from exc
        if len(weights) != V.shape[0]:
            raise CliError(f"weights have length {len(weights)}, V has {V.shape[0]} rows")
    r = cfg.get("r") or V.shape[1]
    if not 1 <= r <= V.shape[1]:
        raise CliError(f"--r must be in [1, {V.shape[1]}], got {r}")
    V = V[:, :r]
    nu = np.ones(V.shape[0]) if weights is None else weights.values
    gram = V.T @ (nu[:, None] * V)
    if np.max(np.abs(gram - np.eye(r))) > 1e-8:
        _say("input columns are not orthonormal; orthonormalizing them first")
        V = qr_orthonormalize(V, weights=weights)
    basis = EigenBasis(V, None, kind, d, weights)
    sc = SebaConfig(cfg.get("mu"), cfg["tol"], cfg["max_iter"])
    try:
        sc.resolve_mu(basis.p if weights is None else weights.total)
    except ValueError as exc:
        raise CliError(f"invalid --mu: {exc}") from exc
    res = seba(basis, sc)
    sio.write_seba1(_path(cfg, "S.seba1"), res.S)
    sio.write_seba1(_path(cfg, "R.seba1"), res.R)
    sio.write_kv(_path(cfg, "metrics.kv"), res.sidecar())
    sio.write_csv_table(_path(cfg, "m.csv"), ["j", "m"],
                        [(j + 1, float(v)) for j, v in enumerate(res.m)])
    if not res.converged:
        _say(f"rotation did not settle within {res.iterations} iterations")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_eigengap(cfg):
    lam = _eigenvalue_column(cfg.get("input") or _path(cfg, "eigenvalues.csv"))
    kind, d = _kind_and_d(cfg, _manifest(cfg))
    if cfg.get("r_max"):
        lam = lam[:cfg["r_max"]]
    try:
        rs = weyl_rescale(lam, kind, d)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    spec_csv, drops_csv = _path(cfg, "spectrum.csv"), _path(cfg, "drops.csv")
    sio.write_csv_table(spec_csv, ["r", "value"],
                        [(int(r), float(v)) for r, v in zip(rs.r, rs.values)])
    sio.write_csv_table(drops_csv, ["r", "drop"], rs.flagged())
    svg.spectrum_plot(spec_csv, drops_csv, _path(cfg, "spectrum.svg"))
    return EXIT_OK


def cmd_scan(cfg):
    V = _read(cfg.get("input") or _path(cfg, "V.seba1"))
    kind, d = _kind_and_d(cfg, _manifest(cfg))
    r_max = cfg.get("r_max") or V.shape[1]
    if not 2 <= r_max <= V.shape[1]:
        raise CliError(f"--r-max must be in [2, {V.shape[1]}], got {r_max}")
    try:
        basis = EigenBasis(V, None, kind, d)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    sc = SebaConfig(cfg.get("mu"), cfg["tol"], cfg["max_iter"])
    table = scan(basis, r_max, sc, threads=_threads(cfg.get("threads")))
    files = {n: _path(cfg, n) for n in ("scan.csv", "rmin.csv", "picks.csv")}
    sio.write_csv_table(files["scan.csv"], ["r", "k", "minval"], table.rows())
    sio.write_csv_table(files["rmin.csv"], ["k", "r_min"], table.optimal_pairs)
    sio.write_csv_table(files["picks.csv"], ["k", "r"], select_kr(table))
    svg.min_value_plot(files["scan.csv"], files["rmin.csv"], _path(cfg, "minvalue.svg"))
    svg.rmin_plot(files["rmin.csv"], _path(cfg, "rmin.svg"), files["picks.csv"])
    return EXIT_OK


def _grid_info(manifest):
    if "nx" not in manifest or "ny" not in manifest:
        return None
    return {
        "nx": int(manifest["nx"]), "ny": int(manifest["ny"]),
        "x_range": (float(manifest["x0"]), float(manifest["x1"])),
        "y_range": (float(manifest["y0"]), float(manifest["y1"])),
        "periodic_x": manifest.get("periodic_x", "false") == "true",
        "refine": int(manifest.get("refine", 2)),
    }


def _grid_field(column, grid, cfg):
    """Refined node field of a box vector, with image points when available."""
    vals = np.asarray(column, float).reshape(grid["ny"], grid["nx"])
    (x0, x1), (y0, y1) = grid["x_range"], grid["y_range"]
    refine = int(cfg.get("refine") or grid["refine"])
    g = GridField.from_cells(vals, x0, x1, y0, y1, refine=refine,
                             periodic_x=grid["periodic_x"])
    img_path = _path(cfg, "image_points.seba1")
    if os.path.exists(img_path):
        img = _read(img_path, "image points")
        if img.shape != (g.values.size, 2):
            raise CliError(f"{img_path}: shape {img.shape} does not match the "
                           f"{g.values.shape} node grid at refine={refine}")
        g.image_points = img.reshape(g.values.shape + (2,))
        g.image_period_x = (x1 - x0) if grid["periodic_x"] else None
    return g


def _cheeger_columns(S, grid, cfg, columns=None):
    if grid is None:
        raise CliError("Cheeger thresholding needs a grid manifest (nx, ny, x0, x1, y0, y1)")
    if S.shape[0] != grid["nx"] * grid["ny"]:
        raise CliError(f"S has {S.shape[0]} rows, grid has {grid['nx'] * grid['ny']} boxes")
    out = []
    for j in (range(S.shape[1]) if columns is None else columns):
        field = _grid_field(S[:, j], grid, cfg)
        out.append((j, field, cheeger_threshold(field, cfg["levels"],
                                                threads=_threads(cfg.get("threads")))))
    return out


def _parse_method(method):
    if method.startswith("manual:"):
        try:
            tau = float(method.split(":", 1)[1])
        except ValueError as exc:
            raise CliError(f"bad manual threshold in {method!r}") from exc
        return "manual", tau
    names = {"partition-unity": "partition_unity", "disjoint": "disjoint_support",
             "maxlike": "max_likelihood", "cheeger": "cheeger"}
    if method not in names:
        raise CliError(f"unknown --method {method!r}")
    return names[method], None


def cmd_threshold(cfg):
    S = _read(cfg.get("input") or _path(cfg, "S.seba1"))
    name, tau = _parse_method(cfg["method"])
    grid = _grid_info(_manifest(cfg))
    info = {"method": name}
    if name == "partition_unity":
        fa = partition_unity(S)
    elif name == "disjoint_support":
        fa = disjoint_support(S)
    elif name == "max_likelihood":
        fa = max_likelihood(S)
    elif name == "manual":
        try:
            fa = manual(S, tau)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    else:
        results = _cheeger_columns(S, grid, cfg)
        taus = np.array([res.tau for _, _, res in results])
        T = hard_threshold(np.maximum(S, 0.0), taus[None, :])
        j = np.argmax(T, axis=1)
        a = np.where(T[np.arange(len(T)), j] > 0, j + 1, 0)
        fa = FeatureAssignment(a, T, float(taus.max()), "cheeger")
        info["taus"] = list(taus)
        info["h"] = [res.h for _, _, res in results]
    info["tau"] = fa.tau
    info["assigned"] = int(np.count_nonzero(fa.a))
    sio.write_csv_table(_path(cfg, "assignment.csv"), ["i", "a"],
                        [(i + 1, int(v)) for i, v in enumerate(fa.a)])
    sio.write_seba1(_path(cfg, "thresholded.seba1"), fa.thresholded_S)
    sio.write_kv(_path(cfg, "threshold.kv"), info)
    sup_csv = _path(cfg, "superposition.csv")
    sio.write_csv_table(sup_csv, ["i", "value"],
                        [(i + 1, float(v)) for i, v in enumerate(superposition(fa.thresholded_S))])
    if grid is not None and S.shape[0] == grid["nx"] * grid["ny"]:
        svg.heatmap_plot(sup_csv, _path(cfg, "superposition.svg"), grid["nx"], grid["ny"],
                         grid["x_range"], grid["y_range"])
    return EXIT_OK


def cmd_cheeger(cfg):
    S = _read(cfg.get("input") or _path(cfg, "S.seba1"))
    grid = _grid_info(_manifest(cfg))
    cols = cfg.get("column")
    if cols is not None and not 1 <= cols <= S.shape[1]:
        raise CliError(f"--column must be in [1, {S.shape[1]}], got {cols}")
    columns = None if cols is None else [cols - 1]
    summary = {}
    for j, field, res in _cheeger_columns(S, grid, cfg, columns):
        tag = j + 1
        curve_csv = _path(cfg, f"cheeger_{tag}.csv")
        contour_csv = _path(cfg, f"contour_{tag}.csv")
        sio.write_csv_table(curve_csv, ["tau", "h"],
                            [(float(t), float(h)) for t, h in zip(res.levels, res.h_values)
                             if np.isfinite(h)])
        rows = []
        for which, segs in (("contour", res.contour), ("image", res.image_contour)):
            if segs is None or len(segs) == 0:
                continue
            for n, line in enumerate(join_segments(segs)):
                rows.extend((which, n, float(x), float(y)) for x, y in line)
        sio.write_csv_table(contour_csv, ["which", "line", "x", "y"], rows)
        x_range = (field.x0, field.x1)
        if res.image_contour is not None and len(res.image_contour):
            pts = np.asarray(res.image_contour).reshape(-1, 2)
            x_range = (min(field.x0, pts[:, 0].min()), max(field.x1, pts[:, 0].max()))
        svg.cheeger_plot(curve_csv, contour_csv, _path(cfg, f"cheeger_{tag}.svg"),
                         x_range, (field.y0, field.y1), tau=res.tau)
        summary[f"tau_{tag}"] = res.tau
        summary[f"h_{tag}"] = res.h
        summary[f"flat_{tag}"] = list(res.flat_interval)
    sio.write_kv(_path(cfg, "cheeger.kv"), summary)
    return EXIT_OK


def _write_basis(cfg, basis, manifest):
    sio.write_seba1(_path(cfg, "V.seba1"), basis.V)
    sio.write_csv_matrix(_path(cfg, "eigenvalues.csv"), basis.eigenvalues[:, None])
    manifest = dict(manifest, kind=basis.kind, d=basis.manifold_dim,
                    p=basis.p, r=basis.r, seed=cfg["seed"])
    sio.write_kv(_path(cfg, "manifest.kv"), manifest)


def cmd_demo(cfg):
    from . import dynamics

    name = cfg["name"]
    threads = _threads(cfg.get("threads"))
    if name == "bickley":
        r = cfg.get("r") or 15
        flow = dynamics.BickleyFlow()
        basis, op = dynamics.bickley_basis(r=r, nx=cfg["nx"], ny=cfg["ny"],
                                           samples_per_box=cfg["samples"], seed=cfg["seed"],
                                           step=cfg["step"], threads=threads, flow=flow)
        (x0, x1), (y0, y1) = op.x_range, op.y_range
        refine = cfg.get("refine") or 2
        field = dynamics.bickley_field(np.zeros(op.n_boxes), op, flow,
                                       refine=refine, step=cfg["step"])
        sio.write_seba1(_path(cfg, "image_points.seba1"), field.image_points.reshape(-1, 2))
        manifest = {"demo": "bickley", "nx": op.nx, "ny": op.ny, "x0": x0, "x1": x1,
                    "y0": y0, "y1": y1, "periodic_x": True, "samples_per_box": cfg["samples"],
                    "t0": flow.t_range[0], "t1": flow.t_range[1], "step": cfg["step"],
                    "refine": refine}
        _write_basis(cfg, basis, manifest)
        return EXIT_OK
    if name == "blobs":
        pts, labels = dynamics.disk_with_blobs(spacing=cfg["spacing"], seed=cfg["seed"])
        basis = dynamics.graph_laplacian_demo(pts, cfg["radius"], r=cfg.get("r") or 6)
        sio.write_csv_table(_path(cfg, "points.csv"), ["i", "x", "y", "label"],
                            [(i + 1, float(x), float(y), int(l))
                             for i, ((x, y), l) in enumerate(zip(pts, labels))])
        _write_basis(cfg, basis, {"demo": "blobs", "radius": cfg["radius"],
                                  "spacing": cfg["spacing"]})
        return EXIT_OK
    if name == "block-markov":
        try:
            sizes = [int(s) for s in str(cfg["blocks"]).split(",")]
        except ValueError as exc:
            raise CliError(f"bad --blocks {cfg['blocks']!r}") from exc
        basis, labels = dynamics.block_markov_demo(sizes, cfg["eps"], seed=cfg["seed"],
                                                   r=cfg.get("r"))
        sio.write_csv_table(_path(cfg, "labels.csv"), ["i", "block"],
                            [(i + 1, int(l) + 1) for i, l in enumerate(labels)])
        _write_basis(cfg, basis, {"demo": "block-markov", "blocks": sizes, "eps": cfg["eps"]})
        return EXIT_OK
    raise CliError(f"unknown demo {name!r}")


# ---------------------------------------------------------------- parsing

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: $SEBA_OUT)")
    common.add_argument("--config", help="key=value file with default options")
    common.add_argument("--input", help="input matrix (CSV or .seba1)")
    common.add_argument("--manifest", help="grid/operator manifest (default: <out>/manifest.kv)")
    common.add_argument("--kind", choices=KIND_CHOICES)
    common.add_argument("--d", type=_positive_int, help="manifold dimension")
    common.add_argument("--threads", type=_positive_int)
    common.add_argument("--seed", type=int)
    common.add_argument("--mu", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", type=_positive_int)

    parser = argparse.ArgumentParser(prog="seba", description="Sparse eigenbasis approximation.")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("run", parents=[common], help="sparse basis of V")
    p.add_argument("--r", type=_positive_int, help="number of leading columns to use")
    p.add_argument("--weights", help="per-row weights (CSV or .seba1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eigengap", parents=[common], help="Weyl-rescaled spectrum and drops")
    p.add_argument("--r-max", type=_positive_int)
    p.set_defaults(func=cmd_eigengap)

    p = sub.add_parser("scan", parents=[common], help="stacked minimum-value scan over r")
    p.add_argument("--r-max", type=_positive_int)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("threshold", parents=[common], help="hard feature assignment")
    p.add_argument("--method", help="partition-unity | disjoint | maxlike | manual:<tau> | cheeger")
    p.add_argument("--levels", type=_positive_int)
    p.add_argument("--refine", type=_positive_int)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("cheeger", parents=[common], help="Cheeger-ratio level sweep per column")
    p.add_argument("--column", type=_positive_int, help="1-based column (default: all)")
    p.add_argument("--levels", type=_positive_int)
    p.add_argument("--refine", type=_positive_int)
    p.set_defaults(func=cmd_cheeger)

    p = sub.add_parser("demo", parents=[common], help="generate a fixture basis")
    p.add_argument("name", choices=["bickley", "blobs", "block-markov"])
    p.add_argument("--r", type=_positive_int)
    p.add_argument("--nx", type=_positive_int)
    p.add_argument("--ny", type=_positive_int)
    p.add_argument("--samples", type=_positive_int, help="samples per Ulam box")
    p.add_argument("--step", type=float, help="RK4 step in days")
    p.add_argument("--refine", type=_positive_int)
    p.add_argument("--blocks", help="comma-separated block sizes")
    p.add_argument("--eps", type=float, help="off-block mass")
    p.add_argument("--radius", type=float, help="graph connection radius")
    p.add_argument("--spacing", type=float, help="point spacing")
    p.set_defaults(func=cmd_demo)
    return parser


def _resolve(parser, args):
    """Merge defaults, the config file and explicit flags, in that order."""
    sub = parser.subcommands[args.command]
    actions = {a.dest: a for a in sub._actions}
    cfg = {k: v for k, v in DEFAULTS.items() if k in actions}
    if args.config:
        if not os.path.exists(args.config):
            raise CliError(f"config file not found: {args.config}")
        try:
            raw = sio.read_kv(args.config)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
        for key, text in raw.items():
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise CliError(f"{args.config}: unknown option {key!r}")
            conv = actions[dest].type or str
            try:
                cfg[dest] = conv(text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise CliError(f"{args.config}: bad value for {key}: {text!r}") from exc
    for key, value in vars(args).items():
        if value is not None:
            cfg[key] = value
    if not cfg.get("out"):
        cfg["out"] = os.environ.get("SEBA_OUT")
    if not cfg.get("out"):
        raise CliError("no output directory: pass --out or set SEBA_OUT")
    if cfg.get("kind"):
        cfg["kind"] = normalize_kind(cfg["kind"])
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(parser, args)
        os.makedirs(cfg["out"], exist_ok=True)
        code = args.func(cfg)
        _write_config(cfg, args.command)
        return code
    except CliError as exc:
        _say(str(exc))
        return exc.code
    except (LinalgError, DegenerateColumn) as exc:
        _say(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        _say(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
