#!/usr/bin/env python3
"""Self-convergence errors against timestep on log-log axes with first- and
second-order reference slopes, from a convergence.csv."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", nargs="+",
                    help="one convergence.csv per integrator variant")
    ap.add_argument("-o", "--output", required=True)
    ap.add_argument("--labels", nargs="*", default=None)
    args = ap.parse_args(argv)
    series = []
    for path in args.csv:
        try:
            with open(path) as fh:
                header = fh.readline().strip().split(",")
            if header[:2] != ["dt", "error"]:
                raise ValueError(f"{path}: expected header dt,error")
            data = np.genfromtxt(path, delimiter=",", skip_header=1)
            data = np.atleast_2d(data)
            if data.shape[1] < 2:
                raise ValueError(f"{path}: malformed rows")
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        keep = np.isfinite(data[:, 1])
        series.append((path, data[keep, 0], data[keep, 1]))
    fig, ax = plt.subplots(figsize=(6.5, 5))
    labels = args.labels or [p for p, _, _ in series]
    for (path, dt, err), label in zip(series, labels):
        ax.loglog(dt, err, "o-", label=label)
    all_dt = np.concatenate([dt for _, dt, _ in series])
    all_err = np.concatenate([e for _, _, e in series])
    ref = np.array([all_dt.min(), all_dt.max()])
    anchor = all_err.max()
    for slope, style in [(1, ":"), (2, "--")]:
        ax.loglog(ref, anchor * (ref / ref.max()) ** slope, "k" + style,
                  lw=0.8, label=f"slope {slope}")
    ax.set_xlabel("dt")
    ax.set_ylabel("|f(dt) - f(dt/2)|")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
