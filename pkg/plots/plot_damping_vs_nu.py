#!/usr/bin/env python3
"""Measured damping rate magnitude against collision frequency from a
sweep_summary.csv."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    try:
        with open(args.csv) as fh:
            header = fh.readline().strip().split(",")
        if header[:2] != ["nu", "gamma"]:
            raise ValueError(f"{args.csv}: expected header nu,gamma")
        data = np.atleast_2d(np.genfromtxt(args.csv, delimiter=",", skip_header=1))
        if data.shape[1] < 2 or np.isnan(data).any():
            raise ValueError(f"{args.csv}: malformed numeric rows")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    nu, gamma = data[:, 0], data[:, 1]
    order = np.argsort(nu)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(nu[order], np.abs(gamma[order]), "o-")
    ax.set_xlabel("collision frequency")
    ax.set_ylabel("|damping rate|")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
