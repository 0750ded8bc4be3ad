"""Explicit leapfrog solver for phi_tt - Laplace(phi) = -4 pi mu0 and the
energy bookkeeping e = 4 pi mu_e + phi_t^2/2 + |grad phi|^2/2."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SupportOverflowError
from .grids import Grid2D

CFL = 0.45

__all__ = [
    "FieldState", "MomentFields", "moments", "leapfrog_step", "laplacian",
    "centered_phi_t", "gradients", "energy_density", "total_energy",
    "energy_residual", "energy_identity_residual", "flux_combination",
    "flux_squares", "kinetic_flux_moment", "check_cfl",
]


@dataclass
class FieldState:
    phi: np.ndarray
    phi_t: np.ndarray
    t: float
    grid: Grid2D
    phi_prev: np.ndarray | None = None  # level t - dt, None at the first level


@dataclass
class MomentFields:
    mu0: np.ndarray
    mu_e: np.ndarray
    mu_p: np.ndarray  # shape (N, N, 2)


def moments(dist):
    """Trapezoid momentum moments of a DistributionGrid."""
    f = dist.f
    edge = np.concatenate([f[:, :, 0, :].ravel(), f[:, :, -1, :].ravel(),
                           f[:, :, :, 0].ravel(), f[:, :, :, -1].ravel()])
    if np.any(edge != 0):
        raise SupportOverflowError("f is nonzero on the momentum-grid boundary")
    pg = dist.pgrid
    P = pg.mesh()
    gamma = np.sqrt(1 + np.sum(P * P, axis=-1))
    W = pg.trapezoid_weights()
    ax = ([2, 3], [0, 1])
    mu0 = np.tensordot(f, W / gamma, axes=ax)
    mu_e = np.tensordot(f, W * gamma, axes=ax)
    mu_p = np.stack([np.tensordot(f, W * P[..., 0], axes=ax),
                     np.tensordot(f, W * P[..., 1], axes=ax)], axis=-1)
    return MomentFields(mu0=mu0, mu_e=mu_e, mu_p=mu_p)


def check_cfl(dt, h):
    if dt > CFL * h * (1 + 1e-12):
        raise ConfigError(f"CFL violated: dt={dt:g} > {CFL}*h={CFL * h:g}")


def laplacian(phi, grid):
    h2 = grid.h**2
    if grid.periodic:
        return (np.roll(phi, 1, 0) + np.roll(phi, -1, 0) + np.roll(phi, 1, 1)
                + np.roll(phi, -1, 1) - 4 * phi) / h2
    lap = np.zeros_like(phi)
    lap[1:-1, 1:-1] = (phi[2:, 1:-1] + phi[:-2, 1:-1] + phi[1:-1, 2:] + phi[1:-1, :-2]
                       - 4 * phi[1:-1, 1:-1]) / h2
    return lap


def leapfrog_step(state, source, dt):
    """Advance phi by one step of phi_tt = Laplace(phi) + source.

    The first step (no previous level) uses the Taylor start
    phi^1 = phi^0 + dt phi_t^0 + dt^2/2 (Laplace phi^0 + source).  The
    returned phi_t is a provisional one-sided estimate (BDF2 after the first
    step); :func:`centered_phi_t` replaces it once the next level exists.
    """
    grid = state.grid
    check_cfl(dt, grid.h)
    acc = laplacian(state.phi, grid) + source
    if state.phi_prev is None:
        new = state.phi + dt * state.phi_t + 0.5 * dt**2 * acc
        new_t = state.phi_t + dt * acc
    else:
        new = 2 * state.phi - state.phi_prev + dt**2 * acc
        new_t = (3 * new - 4 * state.phi + state.phi_prev) / (2 * dt)
    if not grid.periodic:
        for a in (new, new_t):
            a[0, :] = a[-1, :] = a[:, 0] = a[:, -1] = 0.0
    return FieldState(phi=new, phi_t=new_t, t=state.t + dt, grid=grid, phi_prev=state.phi)


def centered_phi_t(phi_prev, phi_next, dt):
    return (phi_next - phi_prev) / (2 * dt)


def _d(a, h, axis, periodic):
    if periodic:
        return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2 * h)
    return np.gradient(a, h, axis=axis, edge_order=2)


def gradients(state):
    """(phi_t, phi_x1, phi_x2); centered in the interior, one-sided at edges."""
    g = state.grid
    return (state.phi_t, _d(state.phi, g.h, 0, g.periodic), _d(state.phi, g.h, 1, g.periodic))


def energy_density(mom, grads):
    phi_t, gx, gy = grads
    return 4 * np.pi * mom.mu_e + 0.5 * phi_t**2 + 0.5 * (gx**2 + gy**2)


def _area_weights(grid):
    w = np.full(grid.n, grid.h)
    if not grid.periodic:
        w[[0, -1]] *= 0.5
    return np.outer(w, w)


def total_energy(e, grid):
    return float(np.sum(e * _area_weights(grid)))


def _flux_divergence(mom, grads, grid):
    phi_t, gx, gy = grads
    J1 = -phi_t * gx + 4 * np.pi * mom.mu_p[..., 0]
    J2 = -phi_t * gy + 4 * np.pi * mom.mu_p[..., 1]
    return _d(J1, grid.h, 0, grid.periodic) + _d(J2, grid.h, 1, grid.periodic)


def energy_residual(e_before, e_after, span, mom, grads, grid):
    """max |(e_after - e_before)/span + div J| over the interior (two cells off the edge)."""
    r = (e_after - e_before) / span + _flux_divergence(mom, grads, grid)
    if not grid.periodic:
        r = r[2:-2, 2:-2]
    return float(np.max(np.abs(r)))


def energy_identity_residual(levels, dt, h):
    """Centered residual of d_t e + div(-phi_t grad phi + 4 pi mu_p) at the middle level.

    ``levels`` is a sequence of three (MomentFields, grads, Grid2D) tuples at
    equally spaced times.
    """
    if len(levels) != 3:
        raise ValueError("need exactly three levels")
    grids = [lv[2] for lv in levels]
    if any(g != grids[0] for g in grids) or abs(grids[0].h - h) > 1e-14 * h:
        raise ValueError("levels are on mismatched grids")
    e = [energy_density(m, g) for m, g, _ in levels]
    m1, g1, grid = levels[1]
    return energy_residual(e[0], e[2], 2 * dt, m1, g1, grid)


def kinetic_flux_moment(f_p, pgrid, omega):
    """4 pi * int gamma (1 + vhat.omega) f dp for one momentum slice f_p."""
    P = pgrid.mesh()
    gamma = np.sqrt(1 + np.sum(P * P, axis=-1))
    k = gamma + P @ np.asarray(omega, dtype=float)
    return 4 * np.pi * float(np.sum(k * f_p * pgrid.trapezoid_weights()))


def flux_combination(phi_t, grad, mu_e, mu_p, omega):
    """e + omega.(-phi_t grad phi + 4 pi mu_p)."""
    grad = np.asarray(grad)
    e = 4 * np.pi * mu_e + 0.5 * phi_t**2 + 0.5 * np.sum(grad * grad, axis=-1)
    J = -phi_t * grad + 4 * np.pi * np.asarray(mu_p)
    return e + np.sum(np.asarray(omega) * J, axis=-1)


def flux_squares(phi_t, grad, kinetic, omega):
    """(omega ^ grad)^2/2 + (phi_t - grad.omega)^2/2 + kinetic."""
    grad = np.asarray(grad)
    omega = np.asarray(omega)
    w = omega[..., 0] * grad[..., 1] - omega[..., 1] * grad[..., 0]
    return 0.5 * w**2 + 0.5 * (phi_t - np.sum(grad * omega, axis=-1)) ** 2 + kinetic
