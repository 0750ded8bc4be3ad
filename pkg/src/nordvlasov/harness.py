"""Configuration, the coupled field/Vlasov loop, verification and probes."""
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import io as nvio
from . import plotting
from .characteristics import GridFieldSampler
from .errors import ConfigError, DomainError, NVError, NumericError, SupportOverflowError
from .field import (CFL, FieldState, energy_density, energy_residual, gradients,
                    leapfrog_step, moments, total_energy)
from .grids import Grid2D
from .initial import PRESETS
from .properties import run_all
from .retarded import ConeHistory, dphi_all, phi_retarded
from .vlasov import GUARD_SHELLS, momentum_grid_for, sl_step, support

__all__ = ["RunConfig", "parse_config", "load_config", "simulate", "run", "verify",
           "probe", "RunResult", "DiagnosticsRecord"]

# momentum support beyond this fraction of the grid half-width aborts the run
OVERFLOW_FRACTION = 0.9
# nodes below DUST_RATIO * sup f_in are zeroed after each step; cubic tails
# would otherwise carry the numerical support into the guard shells
DUST_RATIO = 1e-9
# P(t) counts nodes with f > SUPPORT_RATIO * sup f_in
SUPPORT_RATIO = 1e-12
CAUSAL_MARGIN = 1.0

_BASE_KEYS = {
    "preset": str, "L": float, "N_x": int, "N_p": int, "dt": float, "T_final": float,
    "out_dir": str, "snapshot_stride": int, "history_stride": int,
    "keep_f_history": bool, "seed": int, "verify_scale": float,
    "probe_n_theta": int, "probe_n_tau": int, "probe_fd_step": float,
}


@dataclass(frozen=True)
class RunConfig:
    preset: str
    L: float
    N_x: int
    N_p: int
    dt: float
    T_final: float
    out_dir: str
    snapshot_stride: int
    history_stride: int
    keep_f_history: bool
    seed: int
    verify_scale: float
    probe_n_theta: int
    probe_n_tau: int
    probe_fd_step: float
    params: dict = field(default_factory=dict)

    @property
    def steps(self):
        return int(round(self.T_final / self.dt))

    def initial_data(self):
        ctor, keys = PRESETS[self.preset]
        return ctor(*(self.params[k] for k in keys))

    def echo(self):
        lines = [f"{f.name} = {_show(getattr(self, f.name))}" for f in fields(self) if f.name != "params"]
        lines += [f"{k} = {_show(v)}" for k, v in self.params.items()]
        return "\n".join(lines)

    def replace(self, **kw):
        """Copy with base keys or preset parameters replaced, then revalidated."""
        base = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "params"}
        params = dict(self.params)
        for k, v in kw.items():
            if k in base:
                base[k] = v
            elif k in params:
                params[k] = v
            else:
                raise ConfigError(f"unknown key {k!r}")
        cfg = RunConfig(**base, params=params)
        validate(cfg)
        return cfg


def _show(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _convert(key, typ, text):
    text = text.strip()
    try:
        if typ is bool:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if typ is int:
            return int(text)
        if typ is float:
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {typ.__name__}") from None


def parse_config(text, overrides=()):
    """Parse flat ``key = value`` text (``#`` starts a comment); every key is required."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k in raw:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        raw[k] = v
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r}: expected key=value")
        k, v = (s.strip() for s in ov.split("=", 1))
        if k not in raw:
            raise ConfigError(f"override of unknown key {k!r}")
        raw[k] = v
    missing = [k for k in _BASE_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    base = {k: _convert(k, t, raw[k]) for k, t in _BASE_KEYS.items()}
    if base["preset"] not in PRESETS:
        raise ConfigError(f"unknown preset {base['preset']!r}; choose from {', '.join(PRESETS)}")
    keys = PRESETS[base["preset"]][1]
    missing = [k for k in keys if k not in raw]
    if missing:
        raise ConfigError(f"preset {base['preset']} needs keys: {', '.join(missing)}")
    extra = sorted(set(raw) - set(_BASE_KEYS) - set(keys))
    if extra:
        raise ConfigError(f"unknown keys: {', '.join(extra)}")
    params = {k: _convert(k, float, raw[k]) for k in keys}
    cfg = RunConfig(**base, params=params)
    validate(cfg)
    return cfg


def load_config(path, overrides=()):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text, overrides)


def validate(cfg):
    """CFL, causality and step-count checks; nothing is allocated before these pass."""
    if cfg.L <= 0 or cfg.dt <= 0 or cfg.T_final <= 0:
        raise ConfigError("L, dt and T_final must be positive")
    if cfg.N_x < 8 or cfg.N_p < 8:
        raise ConfigError("N_x and N_p must be at least 8")
    for k in ("snapshot_stride", "history_stride", "probe_n_theta", "probe_n_tau"):
        if getattr(cfg, k) < (0 if k == "snapshot_stride" else 1):
            raise ConfigError(f"{k} out of range")
    if cfg.probe_fd_step <= 0 or cfg.verify_scale <= 0:
        raise ConfigError("probe_fd_step and verify_scale must be positive")
    n = cfg.T_final / cfg.dt
    if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
        raise ConfigError(f"T_final/dt = {n:g} is not a positive integer")
    for k, v in cfg.params.items():
        if k in ("amplitude", "x_radius", "p_radius", "wave_number") and v <= 0:
            raise ConfigError(f"{k} must be positive")
    data = cfg.initial_data()
    grid = Grid2D.box(cfg.L, cfg.N_x, periodic=data.periodic)
    if cfg.dt > CFL * grid.h * (1 + 1e-12):
        raise ConfigError(f"CFL violated: dt={cfg.dt:g} > {CFL}*h_x={CFL * grid.h:g}")
    if data.periodic:
        k = cfg.params.get("wave_number", 0.0)
        m = k * cfg.L / math.pi
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ConfigError(f"wave_number*L/pi = {m:g} must be an integer on the periodic box")
    elif cfg.L < data.x_radius + cfg.T_final + CAUSAL_MARGIN:
        raise ConfigError(f"causality: L={cfg.L:g} < data radius {data.x_radius:g} "
                          f"+ T_final {cfg.T_final:g} + {CAUSAL_MARGIN:g}")
    return cfg


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    total_energy: float
    energy_residual: float
    P_t: float
    barP_t: float
    sup_f: float
    conformal_drift: float
    mass: float
    clipped_mass: float

    def row(self):
        return [getattr(self, c) for c in nvio.DIAGNOSTIC_COLUMNS]


@dataclass
class RunResult:
    config: RunConfig
    records: list
    dist: object  # final DistributionGrid
    phi: np.ndarray
    history: ConeHistory | None
    dust_mass: float

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


@dataclass
class _Level:
    k: int
    e: np.ndarray
    E: float
    mom: object
    grads: tuple
    stats: tuple


def simulate(cfg, history=None, out_dir=None):
    """Run the coupled loop; returns a RunResult.

    Per step: moments of f, one leapfrog step of the field, gradients, one
    semi-Lagrangian step of f in the field interpolated over [t, t + dt].
    phi_t at level k is the centered difference of levels k - 1 and k + 1, so
    the diagnostics of level k are final once level k + 1 exists; the energy
    residual of level k additionally waits for level k + 1's energy.  With
    ``out_dir`` the diagnostics CSV is written row by row and snapshots every
    ``snapshot_stride`` levels.  Errors carry the failing level in ``.step``.
    """
    data = cfg.initial_data()
    xg = Grid2D.box(cfg.L, cfg.N_x, periodic=data.periodic)
    pg = momentum_grid_for(data, cfg.N_p)
    dt, N = cfg.dt, cfg.steps
    dist = data.sample(xg, pg)
    X = xg.mesh()
    phi0 = np.asarray(data.phi0.value(X), dtype=float)
    phi1 = np.asarray(data.phi1.value(X), dtype=float)
    state = FieldState(phi=phi0, phi_t=phi1, t=0.0, grid=xg)

    sup_in = float(dist.f.max(initial=0.0))
    dust_floor = DUST_RATIO * sup_in
    R0 = data.p_radius if sup_in > 0 else 0.0
    occupied = np.any(dist.f > 0, axis=(2, 3))
    running = R0
    running_bar = R0 * float(np.exp(phi0[occupied].max())) if occupied.any() else 0.0
    clipped = 0.0
    dust = 0.0

    log = snapdir = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log = nvio.CsvLog(os.path.join(out_dir, "diagnostics.csv"), nvio.DIAGNOSTIC_COLUMNS)
        if cfg.snapshot_stride > 0:
            snapdir = os.path.join(out_dir, "snapshots")
            os.makedirs(snapdir, exist_ok=True)
    records = []
    levels = []

    def emit(lv, before, after, span):
        r = energy_residual(before.e, after.e, span, lv.mom, lv.grads, xg)
        rec = DiagnosticsRecord(lv.k * dt, lv.E, r, *lv.stats)
        records.append(rec)
        if log is not None:
            log.write(rec.row())

    k = 0
    try:
        mom = moments(dist)
        for k in range(N + 1):
            nxt = leapfrog_step(state, -4 * np.pi * mom.mu0, dt)
            if not np.all(np.isfinite(nxt.phi)):
                raise NumericError("non-finite phi")
            phi_t = state.phi_t if k == 0 else (nxt.phi - state.phi_prev) / (2 * dt)
            grads = gradients(FieldState(state.phi, phi_t, state.t, xg))
            e = energy_density(mom, grads)

            rep = support(dist, running, SUPPORT_RATIO * sup_in, phi=state.phi, running_bar_max=running_bar)
            running, running_bar = rep.P_t - 3.0, rep.barP_t - 3.0
            if running > OVERFLOW_FRACTION * pg.radius:
                raise SupportOverflowError(
                    f"momentum support {running:.4g} exceeds {OVERFLOW_FRACTION} of the grid "
                    f"half-width {pg.radius:.4g}")
            drift = 0.0
            if sup_in > 0:
                w = dist.f * np.exp(-3 * state.phi)[:, :, None, None]
                drift = abs(float(w.max()) / sup_in - 1.0)
            stats = (rep.P_t, rep.barP_t, rep.sup_f, drift, rep.mass, clipped)
            levels.append(_Level(k, e, total_energy(e, xg), mom, grads, stats))
            if len(levels) == 2 and levels[0].k == 0:
                emit(levels[0], levels[0], levels[1], dt)
            elif len(levels) == 3:
                emit(levels[1], levels[0], levels[2], 2 * dt)
                levels.pop(0)

            if history is not None:
                history.append(k, k * dt, mom.mu0, state.phi, grads,
                               dist.f if history.keep_f else None, force=(k == N))
            if snapdir is not None and (k % cfg.snapshot_stride == 0 or k == N):
                _write_snapshots(snapdir, k, state.phi, phi_t, dist.f)
            if k == N:
                break

            provisional = gradients(nxt)
            sampler = GridFieldSampler(xg, k * dt, dt, (state.phi, *grads), (nxt.phi, *provisional))
            dist, info = sl_step(dist, sampler, dt, dust_floor=dust_floor)
            clipped += info.clipped_mass
            dust += info.dust_mass
            mom = moments(dist)
            state = FieldState(phi=nxt.phi, phi_t=nxt.phi_t, t=(k + 1) * dt, grid=xg,
                               phi_prev=nxt.phi_prev)
        last = levels[-1]
        emit(last, levels[-2], last, dt)
    except NVError as err:
        err.step = k
        raise
    finally:
        if log is not None:
            log.close()
    return RunResult(cfg, records, dist, state.phi, history, dust)


def _write_snapshots(snapdir, k, phi, phi_t, f):
    g = GUARD_SHELLS
    if any(np.any(s != 0) for s in (f[:, :, :g], f[:, :, -g:], f[:, :, :, :g], f[:, :, :, -g:])):
        raise SupportOverflowError("refusing to snapshot f with mass on the guard shells")
    nvio.write_snapshot(os.path.join(snapdir, f"phi_{k:06d}.nv2d"), phi)
    nvio.write_snapshot(os.path.join(snapdir, f"phi_t_{k:06d}.nv2d"), phi_t)
    nvio.write_snapshot(os.path.join(snapdir, f"f_{k:06d}.nv2d"), f)


def run(cfg, out_dir=None, history=None):
    """Run with artifacts: diagnostics.csv, snapshots, config.txt and figures."""
    out = out_dir or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(cfg.echo() + "\n")
    res = simulate(cfg, history=history, out_dir=out)
    diag = {c: res.column(c) for c in nvio.DIAGNOSTIC_COLUMNS}
    plotting.diagnostics_figure(diag, os.path.join(out, "diagnostics.png"))
    plotting.field_figure(res.phi, res.dist.xgrid, cfg.T_final, os.path.join(out, "phi_final.png"))
    return res


def verify(cfg, stream=None):
    """Run the property suite; prints one line per property, returns (ok, results)."""
    stream = stream or sys.stdout
    results = run_all(seed=cfg.seed, scale=cfg.verify_scale)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"verify: {sum(r.passed for r in results)}/{len(results)} passed", file=stream)
    return ok, results


def read_points(path):
    cols = nvio.read_csv(path)
    for c in ("t", "x1", "x2"):
        if c not in cols:
            raise ConfigError(f"points file {path} lacks column {c!r}")
    return np.stack([cols["t"], cols["x1"], cols["x2"]], axis=1)


def probe_point(hist, cfg, t, x, n_theta=None, n_tau=None, fd_step=None):
    """One probe row as a dict (without status)."""
    n_theta = n_theta or cfg.probe_n_theta
    n_tau = n_tau or cfg.probe_n_tau
    h = fd_step or cfg.probe_fd_step
    T = hist.times[-1]
    L = hist.grid.half_width
    x = np.asarray(x, dtype=float)
    if not (0.0 <= t <= T + 1e-12):
        raise DomainError(f"t={t:g} outside the run interval [0, {T:g}]")
    if not hist.grid.periodic and np.any(np.abs(x) + h > L):
        raise DomainError(f"x=({x[0]:g}, {x[1]:g}) too close to or outside the box")
    quad = dict(n_theta=n_theta, n_tau=n_tau)
    ret = lambda s, y: phi_retarded(hist, s, y, **quad)
    row = {"t": t, "x1": x[0], "x2": x[1], "phi_grid": hist.phi_grid(t, x), "phi_retarded": ret(t, x)}
    rep = dphi_all(hist, t, x, **quad)
    row.update(dphi_t_rep=rep[0], dphi_x1_rep=rep[1], dphi_x2_rep=rep[2])
    if t - h < 0:
        row["dphi_t_fd"] = (-3 * row["phi_retarded"] + 4 * ret(t + h, x) - ret(t + 2 * h, x)) / (2 * h)
    elif t + h > T + 1e-12:
        row["dphi_t_fd"] = (3 * row["phi_retarded"] - 4 * ret(t - h, x) + ret(t - 2 * h, x)) / (2 * h)
    else:
        row["dphi_t_fd"] = (ret(t + h, x) - ret(t - h, x)) / (2 * h)
    for i, name in ((0, "dphi_x1_fd"), (1, "dphi_x2_fd")):
        e = np.zeros(2)
        e[i] = h
        row[name] = (ret(t, x + e) - ret(t, x - e)) / (2 * h)
    return row


def probe(cfg, points_path, out_dir=None, history=None):
    """Evaluate the probe CSV at every point; returns (rows, n_errors).

    Without ``history`` the run is repeated with history retention.  Rows
    whose point cannot be evaluated get NaN values and an ``error:<kind>``
    status.
    """
    out = out_dir or cfg.out_dir
    pts = read_points(points_path)
    if history is None:
        data = cfg.initial_data()
        xg = Grid2D.box(cfg.L, cfg.N_x, periodic=data.periodic)
        history = ConeHistory(xg, momentum_grid_for(data, cfg.N_p), stride=cfg.history_stride,
                              phi0=data.phi0, phi1=data.phi1, keep_f=cfg.keep_f_history)
        run(cfg, out_dir=out, history=history)
    rows = []
    errors = 0
    for t, x1, x2 in pts:
        try:
            row = probe_point(history, cfg, float(t), (x1, x2))
            row["status"] = "ok"
        except NVError as err:
            errors += 1
            row = {c: math.nan for c in nvio.PROBE_COLUMNS}
            row.update(t=float(t), x1=float(x1), x2=float(x2),
                       status=f"error:{type(err).__name__}:{err.reason}")
        rows.append(row)
    os.makedirs(out, exist_ok=True)
    with nvio.CsvLog(os.path.join(out, "probe.csv"), nvio.PROBE_COLUMNS) as log:
        for r in rows:
            log.write(r)
    cols = {c: np.array([r[c] for r in rows]) for c in nvio.PROBE_COLUMNS}
    plotting.probe_figure(cols, os.path.join(out, "probe.png"))
    return rows, errors
