"""Backward semi-Lagrangian solver for f on the 4D phase-space grid and the
support / moment diagnostics."""
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from . import _kernels
from .characteristics import GridFieldSampler, rk4_step
from .errors import DomainError, SupportOverflowError
from .geometry import one_plus_xi_vhat, relativize
from .grids import DistributionGrid, MomentumGrid
from .initial import InitialData

__all__ = [
    "DistributionGrid", "InitialData", "SupportReport", "StepInfo", "sl_step",
    "support", "sigma_bc", "sup_norm_growth_check", "momentum_grid_for",
]

GUARD_SHELLS = 2
HALO = 3  # cells: a foot within one cell of its node reads nodes up to 3 cells away


@dataclass(frozen=True)
class SupportReport:
    P_t: float
    barP_t: float
    sup_f: float
    mass: float


@dataclass(frozen=True)
class StepInfo:
    clipped_mass: float
    dust_mass: float
    active_fraction: float


def momentum_grid_for(data, n, factor=1.5):
    """Momentum grid of half-width factor * R0 (half-width 1 for vacuum data)."""
    R0 = data.p_radius if data.p_radius > 0 else 1.0 / factor
    return MomentumGrid.from_radius(factor * R0, n)


def _active_mask(f, periodic_x):
    act = (f != 0).view(np.uint8)
    size = 2 * HALO + 1
    for ax in range(4):
        mode = "wrap" if (periodic_x and ax < 2) else "constant"
        act = maximum_filter1d(act, size=size, axis=ax, mode=mode)
    return act.astype(bool)


def _check_guards(f):
    g = GUARD_SHELLS
    shells = [f[:, :, :g, :], f[:, :, -g:, :], f[:, :, :, :g], f[:, :, :, -g:]]
    if any(np.any(s != 0) for s in shells):
        raise SupportOverflowError("f reached the momentum-grid guard shells")


def sl_step(dist, field, dt, dust_floor=0.0):
    """Advance f from t to t + dt.

    Each node (x, p) is traced back over [t, t + dt] with one RK4 step of the
    characteristic system, and f_new = f(foot) exp(3 (phi(t+dt, x) - phi(t, X_foot)))
    with f(foot) from tensor cubic interpolation.  Negative undershoots are
    clipped to zero and values below ``dust_floor`` are removed; both
    amounts (times the cell volume) are reported in the returned StepInfo.
    """
    xg, pg = dist.xgrid, dist.pgrid
    if dt > xg.h:
        raise DomainError("sl_step needs dt <= h_x")
    f = np.ascontiguousarray(dist.f, dtype=np.float64)
    out = np.zeros_like(f)
    t = dist.t
    if isinstance(field, GridFieldSampler) and field.grid == xg:
        if abs(field.t_a - t) > 1e-12 * max(1.0, abs(t)) or abs(field.dt - dt) > 1e-12 * dt:
            raise ValueError("field sampler does not span [t, t + dt]")
        # momentum displacement bound decides whether the halo mask is safe
        fa, fb = field.a, field.b
        pmax = pg.radius * np.sqrt(2)
        fbound = max(np.abs(fa[1]).max() + np.hypot(fa[2], fa[3]).max(),
                     np.abs(fb[1]).max() + np.hypot(fb[2], fb[3]).max()) * (pmax + 1)
        if dt * fbound < pg.h:
            active = _active_mask(f, xg.periodic)
        else:
            active = np.ones(f.shape, dtype=bool)
        clipped = _kernels.sl_sweep(f, out, active, xg.origin, xg.h, xg.n, xg.periodic,
                                    pg.origin, pg.h, pg.n, t, dt, fa, fb)
        frac = float(active.mean())
    else:
        clipped = _generic_sweep(f, out, xg, pg, t, dt, field)
        frac = 1.0
    dust = 0.0
    if dust_floor > 0:
        small = out < dust_floor
        dust = float(out[small].sum())
        out[small] = 0.0
    vol = dist.cell_volume
    new = DistributionGrid(f=out, xgrid=xg, pgrid=pg, t=t + dt)
    _check_guards(out)
    return new, StepInfo(clipped_mass=clipped * vol, dust_mass=dust * vol, active_fraction=frac)


def _generic_sweep(f, out, xg, pg, t, dt, field):
    x = xg.coords
    P = pg.mesh().reshape(-1, 2)
    clipped = 0.0
    for i in range(xg.n):
        row = np.stack([np.full(xg.n, x[i]), x], axis=-1)
        X = np.repeat(row, P.shape[0], axis=0)
        Pn = np.tile(P, (xg.n, 1))
        Xf, Pf, _ = rk4_step(t + dt, X, Pn, -dt, field)
        pts = np.ascontiguousarray(np.concatenate([Xf, Pf], axis=1))
        val = _kernels.cubic4_points(f, xg.origin, xg.h, xg.n, xg.periodic,
                                     pg.origin, pg.h, pg.n, pts)
        neg = val < 0
        clipped += float(-val[neg].sum())
        val[neg] = 0.0
        phi_b = field.weight_phi(t + dt, X)
        phi_a = field.weight_phi(t, Xf)
        val *= np.exp(3 * (phi_b - phi_a))
        out[i] = val.reshape(xg.n, pg.n, pg.n)
    return clipped


def support(dist, running_max, threshold, phi=None, running_bar_max=None):
    """P(t) and bar-P(t) from the nodes where f exceeds ``threshold``.

    ``running_max`` / ``running_bar_max`` are the suprema over earlier times
    (without the +3); ``phi`` is the field on the space grid (zero if None).
    """
    f = dist.f
    pg = dist.pgrid
    pabs = np.hypot(*np.meshgrid(pg.coords, pg.coords, indexing="ij"))
    mask = f > threshold
    pmax = float(np.max(np.where(mask, pabs[None, None], 0.0), initial=0.0))
    if phi is None:
        phi = np.zeros(f.shape[:2])
    weighted = np.exp(phi)[:, :, None, None] * pabs[None, None]
    bmax = float(np.max(np.where(mask, weighted, 0.0), initial=0.0))
    rb = running_max if running_bar_max is None else running_bar_max
    mass = float(f.sum() * dist.cell_volume)
    return SupportReport(P_t=max(running_max, pmax) + 3.0, barP_t=max(rb, bmax) + 3.0,
                         sup_f=float(f.max(initial=0.0)), mass=mass)


def sigma_bc(f_p, pgrid, xi):
    """int f(p) / (gamma (1 + xi.vhat)) dp for one momentum slice."""
    xi = np.asarray(xi, dtype=float)
    if np.hypot(xi[0], xi[1]) > 1:
        raise DomainError("|xi| > 1")
    m = relativize(pgrid.mesh())
    D = one_plus_xi_vhat(np.broadcast_to(xi, m.p.shape), m)
    return float(np.sum(f_p / (m.gamma * D) * pgrid.trapezoid_weights()))


def sup_norm_growth_check(times, sups):
    """Least-squares slope of log sup f against t; returns (rate, rms residual)."""
    times = np.asarray(times, dtype=float)
    sups = np.asarray(sups, dtype=float)
    if times.size < 10:
        raise ValueError("need at least 10 samples")
    if np.all(sups == 0):
        return 0.0, 0.0
    y = np.log(sups)
    A = np.stack([times, np.ones_like(times)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))
