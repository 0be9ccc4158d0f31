#!/usr/bin/env python3
"""Dispatcher: ``plot.py <kind> <csv...> -o <png>``.

Each figure kind lives in its own standalone script; this wrapper just maps
the kind name to the script and forwards the arguments in a subprocess, so
the per-figure scripts stay runnable on their own.
"""

import subprocess
import sys
from pathlib import Path

KINDS = {
    "electric_energy_trace": "plot_electric_energy_trace.py",
    "conservation_drift": "plot_conservation_drift.py",
    "phase_space_heatmap": "plot_phase_space_heatmap.py",
    "convergence_loglog": "plot_convergence_loglog.py",
    "damping_vs_nu": "plot_damping_vs_nu.py",
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] in ("-h", "--help"):
        print(f"usage: plot.py <kind> <csv...> -o <png>\nkinds: {', '.join(KINDS)}")
        return 0 if argv else 2
    kind, rest = argv[0], argv[1:]
    if kind not in KINDS:
        print(f"error: unknown plot kind {kind!r}; choose from {sorted(KINDS)}",
              file=sys.stderr)
        return 2
    script = Path(__file__).parent / KINDS[kind]
    return subprocess.call([sys.executable, str(script), *rest])


if __name__ == "__main__":
    sys.exit(main())
