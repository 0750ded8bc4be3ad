import os
from pathlib import Path

import numpy as np
import pytest

from nordvlasov.cli import main
from nordvlasov.errors import (ConfigError, DomainError, InsufficientHistoryError,
                               SupportOverflowError)
from nordvlasov.grids import Grid2D
from nordvlasov.harness import (load_config, parse_config, probe, probe_point, run, simulate,
                                verify)
from nordvlasov.io import DIAGNOSTIC_COLUMNS, PROBE_COLUMNS, read_csv, read_snapshot
from nordvlasov.properties import run_all
from nordvlasov.retarded import ConeHistory, phi_retarded

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
BUMP = CONFIGS / "gaussian_bump.cfg"
ZERO = CONFIGS / "zero.cfg"
VACUUM = CONFIGS / "vacuum_wave.cfg"
SMALL = ["N_x=24", "N_p=32", "dt=0.1", "T_final=0.5"]


# configuration


def test_shipped_configs_load():
    for p in CONFIGS.glob("*.cfg"):
        cfg = load_config(p)
        assert cfg.steps * cfg.dt == pytest.approx(cfg.T_final)


def test_echo_round_trips():
    cfg = load_config(BUMP)
    assert parse_config(cfg.echo()) == cfg


@pytest.mark.parametrize("edit, match", [
    (lambda s: s.replace("N_x = 64\n", ""), "missing"),
    (lambda s: s + "N_x = 64\n", "duplicate"),
    (lambda s: s + "colour = blue\n", "unknown keys"),
    (lambda s: s + "wave_number = 1\n", "unknown keys"),
    (lambda s: s.replace("amplitude = 0.05\n", ""), "needs keys"),
    (lambda s: s.replace("N_x = 64", "N_x = sixty"), "cannot read"),
    (lambda s: s.replace("keep_f_history = true", "keep_f_history = yes"), "cannot read"),
    (lambda s: s.replace("preset = gaussian-bump", "preset = plasma"), "unknown preset"),
    (lambda s: s.replace("dt = 0.04", "dt = 0.05"), "CFL"),
    (lambda s: s.replace("dt = 0.04", "dt = 0.03"), "integer"),
    (lambda s: s.replace("T_final = 1.0", "T_final = 1.2"), "causality"),
    (lambda s: s.replace("dt = 0.04", "dt = nan"), "cannot read"),
    (lambda s: s + "just some words\n", "key = value"),
])
def test_config_errors(edit, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(edit(BUMP.read_text()))


def test_periodic_box_must_fit_wave():
    with pytest.raises(ConfigError, match="integer"):
        load_config(VACUUM, ["wave_number=1.5"])


def test_overrides():
    cfg = load_config(BUMP, ["N_x=32", "amplitude=0.1"])
    assert cfg.N_x == 32 and cfg.params["amplitude"] == 0.1
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(BUMP, ["nonsense=1"])
    with pytest.raises(ConfigError):
        load_config(BUMP, ["N_x"])
    with pytest.raises(ConfigError):
        cfg.replace(dt=1.0)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


# coupled runs


def test_zero_preset_is_identically_zero():
    res = simulate(load_config(ZERO))
    assert len(res.records) == res.config.steps + 1
    assert [r.t for r in res.records] == [k * 0.1 for k in range(6)]
    for r in res.records:
        assert r.P_t == 3.0 and r.barP_t == 3.0
        for c in ("total_energy", "energy_residual", "sup_f", "conformal_drift", "mass", "clipped_mass"):
            assert getattr(r, c) == 0.0
    assert np.all(res.dist.f == 0) and np.all(res.phi == 0)


def test_vacuum_wave_energy_and_empty_f():
    cfg = load_config(VACUUM)
    res = simulate(cfg)
    E = res.column("total_energy")
    # 0.1 sin(x1) has energy 0.01 pi^2; centered gradients lose a factor 1 - h^2/3
    assert E[0] == pytest.approx(0.01 * np.pi**2, rel=5e-3)
    # O(dt^2) oscillation inside the period, no secular drift over it
    assert (E.max() - E.min()) / E[0] / cfg.T_final < 1e-3
    assert abs(E[-1] / E[0] - 1) < 1e-5
    assert np.all(res.dist.f == 0)
    assert np.all(res.column("mass") == 0) and np.all(res.column("P_t") == 3.0)
    x = res.dist.xgrid.coords
    exact = 0.1 * np.sin(x)[:, None] * np.cos(cfg.T_final)
    assert np.abs(res.phi - exact).max() < 1e-3


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    cfg = load_config(BUMP, SMALL + ["snapshot_stride=2"])
    return cfg, out, run(cfg, out_dir=out)


def test_run_artifacts(small_run):
    cfg, out, res = small_run
    for name in ("diagnostics.csv", "diagnostics.png", "phi_final.png", "config.txt"):
        assert (out / name).stat().st_size > 0
    assert (out / "diagnostics.csv").read_text().splitlines()[0] == ",".join(DIAGNOSTIC_COLUMNS)
    assert parse_config((out / "config.txt").read_text()) == cfg
    cols = read_csv(out / "diagnostics.csv")
    np.testing.assert_array_equal(cols["total_energy"], res.column("total_energy"))


def test_run_snapshots(small_run):
    cfg, out, res = small_run
    snaps = sorted(os.listdir(out / "snapshots"))
    # levels 0, 2, 4 and the final level 5
    assert [s for s in snaps if s.startswith("phi_0")] == [f"phi_{k:06d}.nv2d" for k in (0, 2, 4, 5)]
    np.testing.assert_array_equal(read_snapshot(out / "snapshots" / "f_000005.nv2d"), res.dist.f)
    np.testing.assert_array_equal(read_snapshot(out / "snapshots" / "phi_000005.nv2d"), res.phi)


def test_run_diagnostics_sane(small_run):
    _, _, res = small_run
    P = res.column("P_t")
    assert P[0] == 4.0
    assert np.all(np.diff(P) >= 0)
    assert np.all(res.column("clipped_mass") >= 0) and np.all(np.diff(res.column("clipped_mass")) >= 0)
    E = res.column("total_energy")
    assert np.abs(E / E[0] - 1).max() < 0.05


def test_bit_identical_reruns(small_run, tmp_path):
    cfg, out, _ = small_run
    run(cfg, out_dir=tmp_path)
    assert (tmp_path / "diagnostics.csv").read_bytes() == (out / "diagnostics.csv").read_bytes()


def test_support_overflow_reports_step():
    cfg = load_config(BUMP, ["N_x=24", "N_p=16", "dt=0.1", "T_final=1.0"])
    with pytest.raises(SupportOverflowError) as ei:
        simulate(cfg)
    assert ei.value.step >= 1


# verify


def test_verify_all_pass():
    ok, results = verify(load_config(BUMP), stream=open(os.devnull, "w"))
    assert ok and len(results) == 16


def test_verify_verdicts_seed_independent():
    verdicts = {tuple(r.passed for r in run_all(seed=s, scale=1.0)) for s in range(10)}
    assert verdicts == {(True,) * 16}


def test_verify_tightened_tolerance():
    assert all(r.passed for r in run_all(seed=0, scale=0.01))


# probe


def _points(path, rows):
    path.write_text("t,x1,x2\n" + "".join(f"{t},{a},{b}\n" for t, a, b in rows))
    return path


def test_probe_zero_preset(tmp_path):
    pts = _points(tmp_path / "pts.csv", [(0.0, 0.1, 0.2), (0.5, -0.3, 0.4), (0.9, 0.0, 0.0), (0.2, 5.0, 0.0)])
    rows, errors = probe(load_config(ZERO), pts, out_dir=tmp_path)
    assert errors == 2
    assert [r["status"] for r in rows[:2]] == ["ok", "ok"]
    assert rows[2]["status"].startswith("error:DomainError")
    assert rows[3]["status"].startswith("error:DomainError")
    for r in rows[:2]:
        assert r["phi_grid"] == 0.0 and r["phi_retarded"] == 0.0
    assert (tmp_path / "probe.csv").read_text().splitlines()[0] == ",".join(PROBE_COLUMNS)
    assert (tmp_path / "probe.png").stat().st_size > 0


def test_probe_point_at_zero_equals_initial_field():
    cfg = load_config(VACUUM, ["T_final=0.4"])
    data = cfg.initial_data()
    hist = ConeHistory(Grid2D.box(cfg.L, cfg.N_x, periodic=True), phi0=data.phi0, phi1=data.phi1)
    simulate(cfg, history=hist)
    x = np.array([0.7, -0.2])
    assert phi_retarded(hist, 0.0, x) == pytest.approx(0.1 * np.sin(0.7), rel=1e-14)
    # without stored f the representation columns cannot be formed
    with pytest.raises(InsufficientHistoryError):
        probe_point(hist, cfg, 0.2, x)
    with pytest.raises(DomainError):
        probe_point(hist, cfg, 1.0, x)


# command line


def test_cli_run_and_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(ZERO), "--out", str(tmp_path / "z")]) == 0
    assert (tmp_path / "z" / "diagnostics.png").exists()
    bad = tmp_path / "bad.cfg"
    bad.write_text(ZERO.read_text().replace("dt = 0.1", "dt = 0.5"))
    assert main(["run", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(ZERO), "--override", "bogus=1"]) == 2


def test_cli_runtime_abort(tmp_path, capsys):
    code = main(["run", "--config", str(BUMP), "--out", str(tmp_path),
                 "--override", "N_x=24", "--override", "N_p=16", "--override", "dt=0.1"])
    assert code == 3
    err = capsys.readouterr().err
    assert "abort at step" in err and "SupportOverflowError" in err and "preset = gaussian-bump" in err


def test_cli_verify(capsys):
    assert main(["verify", "--config", str(BUMP)]) == 0
    out = capsys.readouterr().out
    assert "verify: 16/16 passed" in out


def test_cli_probe(tmp_path, capsys):
    pts = _points(tmp_path / "pts.csv", [(0.3, 0.0, 0.1)])
    assert main(["probe", "--config", str(ZERO), "--out", str(tmp_path), "--points", str(pts)]) == 0
    pts = _points(tmp_path / "bad.csv", [(9.0, 0.0, 0.1)])
    assert main(["probe", "--config", str(ZERO), "--out", str(tmp_path), "--points", str(pts)]) == 3
    bad = tmp_path / "nocols.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["probe", "--config", str(ZERO), "--out", str(tmp_path), "--points", str(bad)]) == 2
