"""Run configuration: dataclass, TOML loading, preset resolution, validation."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, fields

from .benchmarks import PRESETS
from .spatial import RECONSTRUCTIONS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class SimConfig:
    preset: str | None = None
    problem: str = "landau"
    k: float = 0.5
    length: float | None = None          # default 2*pi/k
    delta: float = 1e-3
    nu: float = 0.0
    rho0: float | None = None            # default: mean density at t = 0
    n_x: int = 128
    backend: str = "hermite"
    n_v: int = 256
    v0: float = 1.0
    v_max: float = 8.0
    rank: int = 6
    dt: float = 2e-3
    t_end: float = 40.0
    order: int = 2
    field: str = "ampere"
    reconstruction: str = "muscl_mc"
    output_stride: int = 10
    snapshot_times: tuple = ()
    fit_window: tuple = (2.0, 30.0)
    seed: int = 0

    def resolved_length(self) -> float:
        return self.length if self.length is not None else 2.0 * math.pi / self.k

    def validate(self):
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.order == 2 and self.field != "ampere":
            raise ValueError("the second-order integrator requires the ampere field solve")
        if self.field not in ("gauss", "ampere"):
            raise ValueError(f"unknown field solver {self.field!r}")
        if self.backend not in ("hermite", "fd"):
            raise ValueError(f"unknown velocity backend {self.backend!r}")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise ValueError(f"unknown reconstruction {self.reconstruction!r}")
        if self.problem not in ("landau", "two_stream"):
            raise ValueError(f"unknown problem {self.problem!r}")
        for name in ("n_x", "n_v", "rank", "output_stride"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("dt", "t_end", "k"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rank > min(self.n_x, self.n_v):
            raise ValueError("rank exceeds the discretization size")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        d["fit_window"] = list(self.fit_window)
        return d


_FIELD_NAMES = {f.name for f in fields(SimConfig)}


def _apply(cfg_dict: dict, updates: dict, origin: str):
    for key, value in updates.items():
        if key not in _FIELD_NAMES:
            raise ValueError(f"unknown config key {key!r} ({origin})")
        if value is not None:
            cfg_dict[key] = value
    return cfg_dict


def resolve_config(preset: str | None = None, toml_path: str | None = None,
                   overrides: dict | None = None) -> SimConfig:
    """Defaults <- preset <- TOML file <- explicit overrides; flags win."""
    cfg = asdict(SimConfig())
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from "
                             f"{sorted(PRESETS)}")
        p = PRESETS[preset]
        _apply(cfg, {
            "preset": p.name, "problem": p.problem, "backend": p.backend,
            "k": p.k, "delta": p.delta, "nu": p.nu, "n_x": p.n_x, "n_v": p.n_v,
            "rank": p.rank, "dt": p.dt, "t_end": p.t_end, "order": p.order,
            "field": p.field, "snapshot_times": p.snapshot_times,
            "fit_window": p.fit_window,
        }, f"preset {preset}")
    if toml_path is not None:
        with open(toml_path, "rb") as fh:
            data = tomllib.load(fh)
        _apply(cfg, data, toml_path)
    if overrides:
        _apply(cfg, overrides, "command line")
    cfg["snapshot_times"] = tuple(cfg["snapshot_times"])
    cfg["fit_window"] = tuple(cfg["fit_window"])
    return SimConfig(**cfg).validate()
