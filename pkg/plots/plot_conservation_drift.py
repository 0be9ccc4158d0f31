#!/usr/bin/env python3
"""Relative conservation drift of charge, current, and total energy against
time from a diagnostics.csv."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

REQUIRED = ("t", "charge_drift", "current_drift", "energy_drift")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    try:
        with open(args.csv) as fh:
            header = fh.readline().strip().split(",")
        missing = [c for c in REQUIRED if c not in header]
        if missing:
            raise ValueError(f"{args.csv}: missing columns {missing}")
        data = np.genfromtxt(args.csv, delimiter=",", skip_header=1)
        if data.ndim != 2 or data.shape[1] != len(header) or np.isnan(data).any():
            raise ValueError(f"{args.csv}: malformed numeric rows")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cols = {c: data[:, i] for i, c in enumerate(header)}
    floor = 1e-18
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, label in [("charge_drift", "charge"), ("current_drift", "current"),
                        ("energy_drift", "total energy")]:
        ax.semilogy(cols["t"], np.maximum(cols[name], floor), lw=1.0, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
