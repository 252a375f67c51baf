"""Four blobs hanging off a disk: eigengap, scan and SEBA on a graph Laplacian.

Points fill a disk with four round blobs joined to it by thin channels.  The
radius-graph Laplacian has a small eigenvalue for each blob, because a
function that is constant on a blob and zero elsewhere costs little.  The
leading eigenvectors mix the blobs, and SEBA separates them again.

The stacked minimum-value scan runs SEBA for every r up to ``--r-max`` and
asks, for each k, which r gives the k most reliable vectors.

    python demos/blobs.py --out blobs_out
"""
import argparse
import os

import numpy as np

from seba import io as sio
from seba import svg
from seba.basis import seba
from seba.dynamics import disk_with_blobs, graph_laplacian_demo
from seba.heuristics import scan, select_kr, weyl_rescale

NAMES = ["disk", "east blob", "north blob", "west blob", "south blob"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="blobs_out")
    ap.add_argument("--r-max", type=int, default=8)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    pts, labels = disk_with_blobs()
    basis = graph_laplacian_demo(pts, 0.075, r=12)
    print(f"{len(pts)} points; leading eigenvalues {np.round(basis.eigenvalues[:7], 4)}")
    rs = weyl_rescale(basis.eigenvalues, "laplace_neumann", 2)
    print("largest drops of the rescaled spectrum at r =", rs.largest_drops(3))

    res = seba(basis.truncate(5))
    print(f"\nSEBA, r = 5: m = {np.round(res.m, 3)}")
    for j in range(5):
        means = [res.S[labels == b, j].mean() for b in range(5)]
        b = int(np.argmax(means))
        print(f"  s_{j + 1} lives on the {NAMES[b]} (mean {means[b]:.2f} there, "
              f"at most {max(np.delete(means, b)):.2f} elsewhere)")

    table = scan(basis, args.r_max)
    print("\nr_min(k):", dict(sorted(table.r_min_of_k.items())))
    print("suggested (k, r):", select_kr(table))
    files = {n: os.path.join(args.out, n) for n in ("scan.csv", "rmin.csv", "picks.csv")}
    sio.write_csv_table(files["scan.csv"], ["r", "k", "minval"], table.rows())
    sio.write_csv_table(files["rmin.csv"], ["k", "r_min"], table.optimal_pairs)
    sio.write_csv_table(files["picks.csv"], ["k", "r"], select_kr(table))
    svg.min_value_plot(files["scan.csv"], files["rmin.csv"], os.path.join(args.out, "minvalue.svg"))
    svg.rmin_plot(files["rmin.csv"], os.path.join(args.out, "rmin.svg"), files["picks.csv"])

    # points coloured by their strongest sparse vector
    span = pts.min() - 0.1, pts.max() + 0.1
    fig = svg.Figure(span, span, width=520, height=520, title="Strongest sparse vector",
                     xlabel="x", ylabel="y", headroom=0.0)
    owner = res.S.argmax(axis=1)
    for j in range(5):
        sel = (owner == j) & (res.S.max(axis=1) > 0.1)
        fig.markers(pts[sel, 0], pts[sel, 1], color=svg.PALETTE[j], size=1.6)
    fig.save(os.path.join(args.out, "features.svg"))
    print(f"figures written to {args.out}/")


if __name__ == "__main__":
    main()
