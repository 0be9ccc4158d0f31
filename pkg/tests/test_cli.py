import json
import math

import pytest

from kinetic_dlr.cli import (
    fit_order,
    main,
    run_simulation,
    self_convergence_errors,
)
from kinetic_dlr.config import SimConfig, resolve_config

TINY = dict(n_x=32, n_v=32, rank=4, dt=5e-3, t_end=0.1, output_stride=5)


def test_resolve_config_preset_and_overrides():
    cfg = resolve_config("weak_ld_hermite", overrides={"n_x": 64})
    assert cfg.n_x == 64 and cfg.n_v == 256 and cfg.order == 2
    assert cfg.resolved_length() == pytest.approx(4 * math.pi)
    with pytest.raises(ValueError):
        resolve_config("no_such_preset")
    with pytest.raises(ValueError):
        resolve_config(None, overrides={"bogus_key": 1})


def test_config_validation_rules():
    with pytest.raises(ValueError):
        SimConfig(order=2, field="gauss").validate()
    with pytest.raises(ValueError):
        SimConfig(order=3).validate()
    with pytest.raises(ValueError):
        SimConfig(rank=300, n_x=128, n_v=64).validate()
    assert SimConfig(order=1, field="gauss").validate()


def test_toml_config(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text('backend = "fd"\nn_v = 64\nnu = 0.5\n')
    cfg = resolve_config("weak_ld_hermite", str(path), {"nu": 0.25})
    assert cfg.backend == "fd" and cfg.n_v == 64
    assert cfg.nu == 0.25  # flags win over the file


def test_run_writes_outputs(tmp_path):
    rc = main(["run", "--preset", "weak_ld_hermite", "--out", str(tmp_path),
               "--n-x", "32", "--n-v", "32", "--rank", "4", "--dt", "5e-3",
               "--t-end", "0.05", "--output-stride", "5",
               "--snapshots", "0.05"])
    assert rc == 0
    diag = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("t,total_charge,total_current")
    assert len(diag) == 1 + 3  # t = 0, 0.025, 0.05
    meta = json.loads((tmp_path / "run_meta.json").read_text())
    assert meta["config"]["n_x"] == 32
    snap = (tmp_path / "phase_space_t0.050.csv").read_text().splitlines()
    assert snap[0] == "x,v,f"
    assert len(snap) == 1 + 32 * 512


def test_rejects_second_order_gauss(tmp_path):
    rc = main(["run", "--preset", "weak_ld_hermite", "--out", str(tmp_path),
               "--field", "gauss"])
    assert rc == 1


def test_rerun_is_bit_identical(tmp_path):
    outs = []
    for sub in ("a", "b"):
        args = ["run", "--preset", "weak_ld_fd", "--out", str(tmp_path / sub),
                "--n-x", "32", "--n-v", "32", "--rank", "4", "--dt", "5e-3",
                "--t-end", "0.05", "--output-stride", "5"]
        assert main(args) == 0
        outs.append((tmp_path / sub / "diagnostics.csv").read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nan_abort(tmp_path):
    # an unstable configuration must abort with a clear error, not emit junk
    cfg = resolve_config(None, overrides=dict(
        problem="landau", backend="hermite", order=1, field="ampere",
        n_x=32, n_v=64, rank=4, dt=0.5, t_end=50.0, delta=0.5, seed=0))
    with pytest.raises(FloatingPointError):
        run_simulation(cfg)


def test_convergence_driver_validation():
    cfg = resolve_config(None, overrides=dict(order=2, **TINY))
    with pytest.raises(ValueError):
        self_convergence_errors(cfg, [1e-3, 5e-4])  # too few
    with pytest.raises(ValueError):
        self_convergence_errors(cfg, [1e-3, 6e-4, 3e-4])  # not halving


def test_convergence_errors_shrink():
    cfg = resolve_config(None, overrides=dict(
        problem="landau", order=2, reconstruction="weno5", n_x=16, n_v=16,
        rank=3, dt=1e-2, t_end=1.0, delta=0.2, seed=0))
    errors = self_convergence_errors(cfg, [2e-2, 1e-2, 5e-3], t_compare=0.5)
    vals = [e for _, e in errors]
    assert vals[0] > vals[1] > vals[2] > 0
    assert 1.0 < fit_order(errors) < 3.0


def test_fit_order_requires_points():
    with pytest.raises(ValueError):
        fit_order([(1e-3, float("nan")), (5e-4, float("nan"))])


def test_sweep_command(tmp_path):
    rc = main(["sweep", "--preset", "collisional_ld_hermite",
               "--out", str(tmp_path), "--n-x", "32", "--n-v", "48",
               "--rank", "4", "--dt", "5e-3", "--t-end", "30",
               "--output-stride", "10", "--nus", "0.0", "1.0"])
    assert rc == 0
    rows = (tmp_path / "sweep_summary.csv").read_text().splitlines()
    assert rows[0] == "nu,gamma"
    assert len(rows) == 3
    gam0 = float(rows[1].split(",")[1])
    gam1 = float(rows[2].split(",")[1])
    assert gam0 < 0 and abs(gam1) < abs(gam0)
