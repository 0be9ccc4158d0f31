"""Observables, conservation drift tracking, and rate estimation from the
electric-energy trace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import SimState, Stepper


@dataclass
class DiagnosticsRecord:
    t: float
    total_charge: float
    total_current: float
    total_kinetic_energy: float
    electric_energy: float
    total_energy: float
    l2_norm_f: float
    micro_moment_residual: float
    charge_law_residual: float = float("nan")
    energy_law_residual: float = float("nan")

    CSV_FIELDS = (
        "t", "total_charge", "total_current", "total_kinetic_energy",
        "electric_energy", "total_energy", "charge_drift", "current_drift",
        "energy_drift", "micro_moment_residual",
    )


def observables(state: SimState, stepper: Stepper) -> DiagnosticsRecord:
    """Conserved totals from the moment triple and field; the micro part is
    not assumed silent, its moment residual is measured and reported."""
    grid = stepper.grid
    C = stepper.coeffs.c_matrix
    conserved = C @ state.U          # density, current, kinetic energy rows
    dx = grid.dx
    charge = dx * float(np.sum(conserved[0]))
    current = dx * float(np.sum(conserved[1]))
    kinetic = dx * float(np.sum(conserved[2]))
    electric = 0.5 * dx * float(np.sum(state.E**2))
    lr = state.low_rank
    norm_macro_sq = dx * float(np.sum(state.U**2))
    norm_micro_sq = float(np.sum(lr.S**2))
    residual = float(np.max(np.abs(stepper.micro_moment_fields(lr))))
    res = stepper.last_residuals
    return DiagnosticsRecord(
        t=state.t,
        total_charge=charge,
        total_current=current,
        total_kinetic_energy=kinetic,
        electric_energy=electric,
        total_energy=kinetic + electric,
        l2_norm_f=math.sqrt(norm_macro_sq + norm_micro_sq),
        micro_moment_residual=residual,
        charge_law_residual=res.charge,
        energy_law_residual=res.energy,
    )


def relative_drift(values: np.ndarray) -> np.ndarray:
    """|Q(t) - Q(0)| / max(|Q(0)|, 1) per sample."""
    values = np.asarray(values, dtype=float)
    return np.abs(values - values[0]) / max(abs(values[0]), 1.0)


def _energy_peaks(t: np.ndarray, w: np.ndarray, min_separation: int = 5):
    """Strict local maxima of the energy trace with a minimum index
    separation; the first peak (startup transient) is dropped."""
    interior = (w[1:-1] > w[:-2]) & (w[1:-1] > w[2:])
    idx = np.flatnonzero(interior) + 1
    kept = []
    for i in idx:
        if not kept or i - kept[-1] >= min_separation:
            kept.append(i)
    kept = kept[1:]
    return np.array(kept, dtype=int)


def damping_rate(t: np.ndarray, electric_energy: np.ndarray,
                 window: tuple[float, float] = (2.0, 30.0),
                 min_separation: int = 5) -> float:
    """Field damping/growth rate from the log of the electric-energy peaks.

    The least-squares slope of log(peak energy) against the peak times is
    halved: the energy scales as the squared field amplitude.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(electric_energy, dtype=float)
    if np.ptp(w) == 0.0:
        return 0.0
    peaks = _energy_peaks(t, w, min_separation)
    if peaks.size:
        lo, hi = window
        peaks = peaks[(t[peaks] >= lo) & (t[peaks] <= hi)]
    if peaks.size < 4:
        raise ValueError("too few energy peaks in the fit window for a rate fit")
    tp, wp = t[peaks], w[peaks]
    slope = np.polyfit(tp, np.log(wp), 1)[0]
    return 0.5 * float(slope)


def growth_rate(t: np.ndarray, electric_energy: np.ndarray,
                window: tuple[float, float]) -> float:
    """Least-squares slope of the log energy over the window, halved."""
    t = np.asarray(t, dtype=float)
    w = np.asarray(electric_energy, dtype=float)
    lo, hi = window
    mask = (t >= lo) & (t <= hi)
    if np.sum(mask) < 2:
        raise ValueError("fit window outside the series")
    if np.ptp(w[mask]) == 0.0:
        return 0.0
    slope = np.polyfit(t[mask], np.log(w[mask]), 1)[0]
    return 0.5 * float(slope)
