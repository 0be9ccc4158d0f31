#!/usr/bin/env python3
"""Phase-space heatmap f(x, v) from a phase_space_t*.csv snapshot."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_snapshot(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header != ["x", "v", "f"]:
        raise ValueError(f"{path}: expected header x,v,f, got {header}")
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != 3 or np.isnan(data).any():
        raise ValueError(f"{path}: malformed numeric rows")
    x = np.unique(data[:, 0])
    v = np.unique(data[:, 1])
    if x.size * v.size != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a full (x, v) raster")
    f = data[:, 2].reshape(x.size, v.size)
    return x, v, f


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    try:
        x, v, f = load_snapshot(args.csv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    fig, ax = plt.subplots(figsize=(8, 4.5))
    mesh = ax.pcolormesh(x, v, f.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="f(x, v)")
    ax.set_xlabel("x")
    ax.set_ylabel("v")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
