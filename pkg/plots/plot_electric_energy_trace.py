#!/usr/bin/env python3
"""Log-scale electric-energy trace from a diagnostics.csv, with the fitted
damping/growth line overlaid."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

REQUIRED = ("t", "electric_energy")


def load_diagnostics(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    missing = [c for c in REQUIRED if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != len(header) or np.isnan(data).any():
        raise ValueError(f"{path}: malformed numeric rows")
    return {c: data[:, i] for i, c in enumerate(header)}


def fit_rate(t, w):
    """Half the least-squares slope of log(peak energy) against time."""
    interior = (w[1:-1] > w[:-2]) & (w[1:-1] > w[2:])
    idx = np.flatnonzero(interior) + 1
    kept = []
    for i in idx:
        if not kept or i - kept[-1] >= 5:
            kept.append(i)
    kept = kept[1:]
    if len(kept) < 4:
        return None, None
    coef = np.polyfit(t[kept], np.log(w[kept]), 1)
    return 0.5 * coef[0], coef


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)
    try:
        cols = load_diagnostics(args.csv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    t, w = cols["t"], cols["electric_energy"]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.semilogy(t, np.maximum(w, 1e-300), lw=1.0, label="electric energy")
    gamma, coef = fit_rate(t, w)
    if gamma is not None:
        ax.semilogy(t, np.exp(np.polyval(coef, t)), "k--", lw=1.0,
                    label=f"fit, rate {gamma:+.4f}")
    ax.set_xlabel("t")
    ax.set_ylabel("electric energy")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
