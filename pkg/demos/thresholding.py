"""From overlapping sparse vectors to hard features.

Three bump-shaped vectors on [0, 1] overlap, and the first two add up to
more than one where they meet, so they cannot be read as probabilities of
mutually exclusive features.  Two uniform thresholds repair this:

* the partition-of-unity threshold removes just enough that every point's
  values sum to at most one;
* the disjoint-support threshold removes enough that every point belongs to
  at most one vector.

Whenever the second threshold reaches 1/2 the two coincide.  Maximum
likelihood and the superposition vector are shown for comparison.

    python demos/thresholding.py --out thresholding_out
"""
import argparse
import os

import numpy as np

from seba import svg
from seba.thresholding import (disjoint_support, max_likelihood, partition_unity,
                               superposition)


def bumps(p=400):
    x = np.linspace(0.0, 1.0, p)

    def bump(c, w):
        return np.clip(1.0 - ((x - c) / w) ** 2, 0.0, None)

    return x, np.column_stack([bump(0.3, 0.18), bump(0.5, 0.18), bump(0.8, 0.1)])


def plot(x, S, path, title):
    fig = svg.Figure((0.0, 1.0), (0.0, 1.05), title=title, xlabel="x", ylabel="value")
    for j in range(S.shape[1]):
        fig.line(x, S[:, j], color=svg.PALETTE[j])
    fig.line(x, S.sum(axis=1), color="#777777", width=1.0, dash="4,3")
    fig.legend([(f"s{j + 1}", svg.PALETTE[j]) for j in range(S.shape[1])]
               + [("row sum", "#777777")])
    fig.save(path)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="thresholding_out")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    x, S = bumps()
    print(f"largest row sum before thresholding: {S.sum(axis=1).max():.3f}")
    pu = partition_unity(S)
    dp = disjoint_support(S)
    ml = max_likelihood(S)
    print(f"partition of unity: tau = {pu.tau:.4f}, largest row sum "
          f"{pu.thresholded_S.sum(axis=1).max():.3f}")
    print(f"disjoint supports:  tau = {dp.tau:.4f}, most positive entries in a row "
          f"{(dp.thresholded_S > 0).sum(axis=1).max()}")
    for name, fa in (("partition of unity", pu), ("disjoint supports", dp),
                     ("maximum likelihood", ml)):
        print(f"  {name:19s} points per feature {fa.counts[1:].tolist()}, unassigned {fa.counts[0]}")

    sup = superposition(S)
    print(f"superposition reaches 1 on {np.mean(sup == 1):.0%} of the interval")

    plot(x, S, os.path.join(args.out, "raw.svg"), "Sparse vectors")
    plot(x, pu.thresholded_S, os.path.join(args.out, "partition_unity.svg"),
         f"Partition of unity, tau = {pu.tau:.3f}")
    plot(x, dp.thresholded_S, os.path.join(args.out, "disjoint.svg"),
         f"Disjoint supports, tau = {dp.tau:.3f}")
    print(f"figures written to {args.out}/")


if __name__ == "__main__":
    main()
