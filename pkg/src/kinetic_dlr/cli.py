"""Command line entry points: single runs, timestep convergence studies, and
collision-frequency sweeps.  Output files are deterministic for a fixed
configuration and seed."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import initial_state, make_backend
from .config import SimConfig, resolve_config
from .diagnostics import DiagnosticsRecord, damping_rate, observables, relative_drift
from .integrator import SimState, Stepper
from .spatial import XGrid


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class RunResult:
    def __init__(self, config: SimConfig, records: list[DiagnosticsRecord],
                 state: SimState, stepper: Stepper):
        self.config = config
        self.records = records
        self.state = state
        self.stepper = stepper

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def electric_energy(self) -> np.ndarray:
        return np.array([r.electric_energy for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def build_simulation(config: SimConfig):
    grid = XGrid(config.resolved_length(), config.n_x)
    backend = make_backend(config.backend, config.n_v, v0=config.v0,
                           v_max=config.v_max)
    rng = np.random.default_rng(config.seed)
    state = initial_state(config.problem, grid, backend, config.k, config.delta,
                          config.rank, rng=rng)
    stepper = Stepper(grid, backend, nu=config.nu,
                      reconstruction=config.reconstruction, field=config.field,
                      rho0=config.rho0, rng=rng)
    return grid, backend, state, stepper


def _cfl_warnings(config: SimConfig, stepper: Stepper, state: SimState):
    sys_0 = stepper.hyperbolic_system(state.low_rank.V)
    cfl = config.dt * sys_0.max_speed / stepper.grid.dx
    if cfl > 0.9:
        print(f"warning: advective CFL number {cfl:.2f} exceeds 0.9",
              file=sys.stderr)
    if config.backend == "fd" and config.nu > 0:
        from .orthopoly import conserved_to_uT

        _, _, T = conserved_to_uT(stepper.coeffs, state.U)
        diff = (2.0 * config.nu * float(np.max(T)) * config.dt
                / stepper.backend.delta_v**2)
        if diff > 0.9:
            print(f"warning: collisional diffusion number {diff:.2f} exceeds 0.9",
                  file=sys.stderr)


def run_simulation(config: SimConfig, snapshot_sink=None,
                   progress: bool = False) -> RunResult:
    """Advance to t_end, collecting one diagnostics record per output stride.

    Detecting a non-finite moment or field aborts with the offending time.
    snapshot_sink(state, stepper) is called at the configured snapshot times.
    """
    grid, backend, state, stepper = build_simulation(config)
    _cfl_warnings(config, stepper, state)
    n_steps = int(round(config.t_end / config.dt))
    snap_steps = {int(round(ts / config.dt)) for ts in config.snapshot_times}
    records = [observables(state, stepper)]
    if 0 in snap_steps and snapshot_sink is not None:
        snapshot_sink(state, stepper)
    for step in range(1, n_steps + 1):
        try:
            state = stepper.step(state, config.dt, order=config.order)
        except np.linalg.LinAlgError as exc:
            raise FloatingPointError(
                f"non-finite state detected at t = {state.t:.6g}") from exc
        if not (np.all(np.isfinite(state.U)) and np.all(np.isfinite(state.E))
                and np.all(np.isfinite(state.low_rank.S))):
            raise FloatingPointError(
                f"non-finite state detected at t = {state.t:.6g}")
        if step % config.output_stride == 0 or step == n_steps:
            records.append(observables(state, stepper))
        if step in snap_steps and snapshot_sink is not None:
            snapshot_sink(state, stepper)
        if progress and step % max(1, n_steps // 20) == 0:
            print(f"  t = {state.t:8.3f} ({100 * step // n_steps}%)",
                  file=sys.stderr)
    return RunResult(config, records, state, stepper)


def write_diagnostics_csv(path: Path, records: list[DiagnosticsRecord]):
    charge = relative_drift(np.array([r.total_charge for r in records]))
    current = relative_drift(np.array([r.total_current for r in records]))
    energy = relative_drift(np.array([r.total_energy for r in records]))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(DiagnosticsRecord.CSV_FIELDS) + "\n")
        for i, r in enumerate(records):
            row = [r.t, r.total_charge, r.total_current, r.total_kinetic_energy,
                   r.electric_energy, r.total_energy, charge[i], current[i],
                   energy[i], r.micro_moment_residual]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_phase_space_csv(path: Path, state: SimState, stepper: Stepper,
                          n_v_raster: int = 512):
    """Dense f = N + g on an (x, v) raster; plot fidelity only."""
    backend = stepper.backend
    v = backend.default_raster(n_v_raster)
    if backend.kind == "hermite":
        basis = backend.basis_on_grid(v)            # (n_raster, M+1)
        macro = basis[:, :3]
        micro_v = basis @ state.low_rank.V
    else:
        macro = backend.macro_basis
        micro_v = state.low_rank.V
    f = state.U.T @ macro.T + state.low_rank.X @ state.low_rank.S @ micro_v.T
    x = stepper.grid.points
    with open(path, "w", newline="") as fh:
        fh.write("x,v,f\n")
        for i in range(x.size):
            for j in range(v.size):
                fh.write(f"{_fmt(x[i])},{_fmt(v[j])},{_fmt(f[i, j])}\n")


def write_run_meta(path: Path, config: SimConfig):
    meta = {"version": __version__, "config": config.to_dict()}
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def self_convergence_errors(config: SimConfig, dts: list[float],
                            t_compare: float = 5.0, progress: bool = False):
    """L2 distance over (x, v) between runs at dt and dt/2, compared at
    t_compare on the common representation."""
    if len(dts) < 3:
        raise ValueError("need at least 3 timestep values")
    ratios = [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]
    if any(abs(rr - 2.0) > 1e-9 for rr in ratios):
        raise ValueError("timestep list must halve between entries")
    solutions = {}
    failed = set()
    for dt in dts + [dts[-1] / 2.0]:
        cfg_dict = config.to_dict()
        cfg_dict.update(dt=dt, t_end=t_compare, snapshot_times=(),
                        preset=config.preset)
        cfg = SimConfig(**{k: tuple(v) if isinstance(v, list) else v
                           for k, v in cfg_dict.items()}).validate()
        try:
            result = run_simulation(cfg, progress=progress)
        except FloatingPointError:
            failed.add(dt)
            continue
        st = result.state
        dense = np.concatenate(
            [st.U.T, st.low_rank.X @ st.low_rank.S @ st.low_rank.V.T], axis=1)
        solutions[dt] = (dense, result.stepper)
    errors = []
    for dt in dts:
        if dt in failed or dt / 2.0 in failed:
            errors.append((dt, math.nan))
            continue
        a, stepper = solutions[dt]
        b, _ = solutions[dt / 2.0]
        diff = a - b
        # trapezoid in x, weighted quadrature in v (macro block is already
        # orthonormal in v, the micro block carries the backend weight)
        w_macro = stepper.grid.dx
        w_micro = stepper.grid.dx * stepper.backend.weight_dot
        err = math.sqrt(w_macro * float(np.sum(diff[:, :3] ** 2))
                        + w_micro * float(np.sum(diff[:, 3:] ** 2)))
        errors.append((dt, err))
    return errors


def fit_order(errors) -> float:
    pts = [(dt, e) for dt, e in errors if math.isfinite(e) and e > 0]
    if len(pts) < 2:
        raise ValueError("too few finite error pairs to fit an order")
    logs = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(logs[0], logs[1], 1)[0])


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _add_override_args(p: argparse.ArgumentParser):
    p.add_argument("--preset", default=None)
    p.add_argument("--config", dest="config_path", default=None)
    p.add_argument("--out", default="out")
    for name, typ in [
        ("k", float), ("length", float), ("delta", float), ("nu", float),
        ("rho0", float), ("n-x", int), ("n-v", int), ("v0", float),
        ("v-max", float), ("rank", int), ("dt", float), ("t-end", float),
        ("order", int), ("output-stride", int), ("seed", int),
    ]:
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--problem", choices=("landau", "two_stream"), default=None)
    p.add_argument("--backend", choices=("hermite", "fd"), default=None)
    p.add_argument("--field", choices=("gauss", "ampere"), default=None)
    p.add_argument("--reconstruction", choices=("muscl_mc", "weno5", "upwind1"),
                   default=None)
    p.add_argument("--snapshots", type=float, nargs="*", default=None)


def _overrides_from_args(args) -> dict:
    keys = ["problem", "k", "length", "delta", "nu", "rho0", "n_x", "backend",
            "n_v", "v0", "v_max", "rank", "dt", "t_end", "order", "field",
            "reconstruction", "output_stride", "seed"]
    out = {k: getattr(args, k) for k in keys}
    if args.snapshots is not None:
        out["snapshot_times"] = tuple(args.snapshots)
    return out


def cmd_run(args) -> int:
    config = resolve_config(args.preset, args.config_path,
                            _overrides_from_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def sink(state, stepper):
        write_phase_space_csv(out / f"phase_space_t{state.t:.3f}.csv",
                              state, stepper)

    result = run_simulation(config, snapshot_sink=sink, progress=args.progress)
    write_diagnostics_csv(out / "diagnostics.csv", result.records)
    write_run_meta(out / "run_meta.json", config)
    print(f"wrote {out / 'diagnostics.csv'} ({len(result.records)} rows)")
    return 0


def cmd_convergence(args) -> int:
    overrides = _overrides_from_args(args)
    overrides.setdefault("reconstruction", None)
    if overrides["reconstruction"] is None:
        overrides["reconstruction"] = "weno5"
    if overrides["dt"] is not None:
        raise SystemExit("convergence chooses its own dt sweep; do not pass --dt")
    overrides["dt"] = 1e-3  # placeholder, replaced per sweep member
    config = resolve_config(args.preset, args.config_path, overrides)
    dts = args.dts or ([4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4]
                       if config.order == 1 else [8e-3, 4e-3, 2e-3, 1e-3, 5e-4])
    errors = self_convergence_errors(config, dts, t_compare=args.t_compare,
                                     progress=args.progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w") as fh:
        fh.write("dt,error\n")
        for dt, err in errors:
            fh.write(f"{_fmt(dt)},{_fmt(err)}\n")
    order = fit_order(errors)
    print(f"fitted self-convergence order: {order:.3f}")
    for dt, err in errors:
        print(f"  dt={dt:9.2e}  |f(dt)-f(dt/2)| = {err:.6e}")
    write_run_meta(out / "run_meta.json", config)
    return 0


def cmd_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for nu in args.nus:
        overrides = _overrides_from_args(args)
        overrides["nu"] = nu
        config = resolve_config(args.preset, args.config_path, overrides)
        sub = out / f"nu_{nu:g}"
        sub.mkdir(parents=True, exist_ok=True)
        result = run_simulation(config, progress=args.progress)
        write_diagnostics_csv(sub / "diagnostics.csv", result.records)
        write_run_meta(sub / "run_meta.json", config)
        gamma = damping_rate(result.times, result.electric_energy,
                             window=config.fit_window)
        rows.append((nu, gamma))
        print(f"nu = {nu:g}: damping rate {gamma:+.5f}")
    with open(out / "sweep_summary.csv", "w") as fh:
        fh.write("nu,gamma\n")
        for nu, gamma in rows:
            fh.write(f"{_fmt(nu)},{_fmt(gamma)}\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kinetic-dlr",
        description="Conservative macro-micro low-rank Vlasov solver")
    parser.add_argument("--progress", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="advance one configuration to t_end")
    _add_override_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="timestep self-convergence study")
    _add_override_args(p_conv)
    p_conv.add_argument("--dts", type=float, nargs="*", default=None)
    p_conv.add_argument("--t-compare", type=float, default=5.0)
    p_conv.set_defaults(func=cmd_convergence)

    p_sweep = sub.add_parser("sweep", help="collision frequency sweep")
    _add_override_args(p_sweep)
    p_sweep.add_argument("--nus", type=float, nargs="+", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
