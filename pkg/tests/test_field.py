import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nordvlasov.errors import ConfigError, SupportOverflowError
from nordvlasov.field import (FieldState, MomentFields, centered_phi_t, energy_density,
                              energy_identity_residual, flux_combination, flux_squares,
                              gradients, kinetic_flux_moment, leapfrog_step, moments,
                              total_energy)
from nordvlasov.grids import DistributionGrid, Grid2D, MomentumGrid
from nordvlasov.io import read_snapshot, write_snapshot


def standing_wave(n, T=1.0):
    """Leapfrog run of sin(x1) cos(t) on the periodic box [-pi, pi)^2; returns L_inf error."""
    g = Grid2D.box(np.pi, n, periodic=True)
    steps = int(np.ceil(T / (0.45 * g.h)))
    dt = T / steps
    X = g.mesh()
    st_ = FieldState(np.sin(X[..., 0]), np.zeros((n, n)), 0.0, g)
    zero = np.zeros((n, n))
    for _ in range(steps):
        st_ = leapfrog_step(st_, zero, dt)
    return np.abs(st_.phi - np.sin(X[..., 0]) * np.cos(T)).max()


def dist_with(f, xg, pg):
    return DistributionGrid(f=f, xgrid=xg, pgrid=pg)


# moments


def test_moments_zero():
    xg, pg = Grid2D.box(1, 4), MomentumGrid.from_radius(1, 9)
    m = moments(dist_with(np.zeros((4, 4, 9, 9)), xg, pg))
    for a in (m.mu0, m.mu_e, m.mu_p):
        assert np.all(a == 0)


def test_moments_narrow_bump():
    xg, pg = Grid2D.box(1, 3), MomentumGrid.from_radius(0.2, 81)
    P = pg.mesh()
    s2 = np.sum(P * P, -1) / 0.1**2
    bump = np.where(s2 < 1, (1 - s2) ** 4, 0.0)
    bump /= np.sum(bump * pg.trapezoid_weights())
    f = np.broadcast_to(bump, (3, 3, 81, 81)).copy()
    m = moments(dist_with(f, xg, pg))
    # <gamma^{-1}> and <gamma> for the (1-s^2)^4 profile of radius 0.1 differ from 1 by O(0.1^2)
    assert m.mu0[1, 1] == pytest.approx(1.0, abs=5e-3)
    assert m.mu_e[1, 1] == pytest.approx(1.0, abs=5e-3)
    assert np.abs(m.mu_p).max() < 1e-14


def test_moments_even_in_p_has_zero_flux():
    rng = np.random.default_rng(0)
    xg, pg = Grid2D.box(1, 4), MomentumGrid.from_radius(1, 11)
    half = rng.random((4, 4, 11, 11))
    f = half + half[:, :, ::-1, ::-1]
    f[:, :, [0, -1], :] = 0
    f[:, :, :, [0, -1]] = 0
    m = moments(dist_with(f, xg, pg))
    assert np.abs(m.mu_p).max() < 1e-13 * m.mu_e.max()
    assert np.all(m.mu0 >= 0) and np.all(m.mu_e >= m.mu0)


def test_moments_overflow():
    xg, pg = Grid2D.box(1, 3), MomentumGrid.from_radius(1, 9)
    f = np.zeros((3, 3, 9, 9))
    f[1, 1, 0, 4] = 1.0
    with pytest.raises(SupportOverflowError):
        moments(dist_with(f, xg, pg))


# leapfrog


def test_leapfrog_zero():
    g = Grid2D.box(1, 16)
    st_ = FieldState(np.zeros((16, 16)), np.zeros((16, 16)), 0.0, g)
    for _ in range(5):
        st_ = leapfrog_step(st_, np.zeros((16, 16)), 0.05)
    assert np.all(st_.phi == 0)


def test_leapfrog_cfl():
    g = Grid2D.box(1, 16)
    st_ = FieldState(np.zeros((16, 16)), np.zeros((16, 16)), 0.0, g)
    with pytest.raises(ConfigError):
        leapfrog_step(st_, np.zeros((16, 16)), 0.46 * g.h)


def test_leapfrog_constant_source():
    g = Grid2D.box(3, 61)
    dt, n, c = 0.02, 25, 1.7
    st_ = FieldState(np.zeros((61, 61)), np.zeros((61, 61)), 0.0, g)
    src = np.full((61, 61), c)
    for _ in range(n):
        st_ = leapfrog_step(st_, src, dt)
    # the Dirichlet edge is n cells away from the central block
    T = n * dt
    assert st_.phi[30, 30] == pytest.approx(c * T**2 / 2, rel=1e-12)


def test_leapfrog_standing_wave_order():
    e = [standing_wave(n) for n in (32, 64, 128)]
    assert np.log2(e[1] / e[2]) == pytest.approx(2.0, abs=0.3)


# gradients


def test_gradients_constant_and_linear():
    g = Grid2D.box(1, 12)
    X = g.mesh()
    st_ = FieldState(np.full((12, 12), 3.0), np.zeros((12, 12)), 0.0, g)
    _, gx, gy = gradients(st_)
    assert np.abs(gx).max() == 0 and np.abs(gy).max() == 0
    _, gx, gy = gradients(FieldState(X[..., 0].copy(), np.zeros((12, 12)), 0.0, g))
    np.testing.assert_allclose(gx, 1.0, rtol=1e-13)
    assert np.abs(gy).max() < 1e-13


def test_gradients_second_order():
    errs = []
    for n in (33, 65, 129):
        g = Grid2D.box(1, n)
        X = g.mesh()
        st_ = FieldState(np.sin(X[..., 0] + 2 * X[..., 1]), np.zeros((n, n)), 0.0, g)
        _, gx, gy = gradients(st_)
        errs.append(max(np.abs(gx - np.cos(X[..., 0] + 2 * X[..., 1])).max(),
                        np.abs(gy - 2 * np.cos(X[..., 0] + 2 * X[..., 1])).max()))
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.3)


def test_centered_phi_t():
    assert centered_phi_t(np.array(1.0), np.array(2.0), 0.5) == 1.0


# energy


def test_energy_density_cases():
    z = np.zeros((4, 4))
    vac = MomentFields(z, z, np.zeros((4, 4, 2)))
    assert np.all(energy_density(vac, (z, z, z)) == 0)
    mu_e = np.random.default_rng(1).random((4, 4))
    m = MomentFields(0.5 * mu_e, mu_e, np.zeros((4, 4, 2)))
    np.testing.assert_array_equal(energy_density(m, (z, z, z)), 4 * np.pi * mu_e)


def _wave_level(g, t):
    X = g.mesh()
    z = np.zeros(X.shape[:2])
    grads = (-np.sin(X[..., 0]) * np.sin(t), np.cos(X[..., 0]) * np.cos(t), z)
    return MomentFields(z, z, np.zeros(X.shape)), grads


def test_vacuum_energy_constant():
    energies = []
    for n in (32, 64):
        g = Grid2D.box(np.pi, n, periodic=True)
        E = [total_energy(energy_density(*_wave_level(g, t)), g) for t in (0.0, 0.7, 1.9)]
        energies.append(max(abs(e - E[0]) for e in E) / E[0])
    assert energies[1] < 1e-12


def test_vacuum_energy_drift_leapfrog():
    # baseline resolution: drift < 1e-3 relative per unit time
    n = 64
    g = Grid2D.box(np.pi, n, periodic=True)
    dt = 0.45 * g.h
    X = g.mesh()
    zero = np.zeros((n, n))
    st_ = FieldState(np.sin(X[..., 0]), zero.copy(), 0.0, g)
    mom = MomentFields(zero, zero, np.zeros((n, n, 2)))
    prev = None
    E = []
    for k in range(int(2 * np.pi / dt)):
        nxt = leapfrog_step(st_, zero, dt)
        phi_t = st_.phi_t if prev is None else (nxt.phi - st_.phi_prev) / (2 * dt)
        E.append(total_energy(energy_density(mom, gradients(FieldState(st_.phi, phi_t, 0, g))), g))
        prev, st_ = st_, nxt
    T = len(E) * dt
    assert (max(E) - min(E)) / E[0] / T < 1e-3


def test_energy_identity_residual():
    z = np.zeros((8, 8))
    g = Grid2D.box(1, 8)
    lv = (MomentFields(z, z, np.zeros((8, 8, 2))), (z, z, z), g)
    assert energy_identity_residual([lv, lv, lv], 0.1, g.h) == 0.0
    res = []
    for n in (32, 64, 128):
        g = Grid2D.box(np.pi, n, periodic=True)
        dt = 0.45 * g.h
        levels = [(*_wave_level(g, 0.5 + k * dt), g) for k in (-1, 0, 1)]
        res.append(energy_identity_residual(levels, dt, g.h))
    assert np.log2(res[1] / res[2]) == pytest.approx(2.0, abs=0.3)


def test_energy_identity_mismatched():
    z = np.zeros((8, 8))
    g1, g2 = Grid2D.box(1, 8), Grid2D.box(2, 8)
    lv = lambda g: (MomentFields(z, z, np.zeros((8, 8, 2))), (z, z, z), g)
    with pytest.raises(ValueError):
        energy_identity_residual([lv(g1), lv(g2), lv(g1)], 0.1, g1.h)


vals = st.floats(-5, 5, allow_nan=False)


@given(vals, vals, vals, st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_flux_combination_identity(phi_t, g1, g2, a, seed):
    # both sides computed independently for a random momentum slice
    rng = np.random.default_rng(seed)
    pg = MomentumGrid.from_radius(2, 9)
    f = rng.random((9, 9))
    omega = np.array([np.cos(a), np.sin(a)])
    P = pg.mesh()
    W = pg.trapezoid_weights()
    gamma = np.sqrt(1 + np.sum(P * P, -1))
    mu_e = np.sum(gamma * f * W)
    mu_p = np.array([np.sum(P[..., 0] * f * W), np.sum(P[..., 1] * f * W)])
    grad = np.array([g1, g2])
    lhs = flux_combination(phi_t, grad, mu_e, mu_p, omega)
    rhs = flux_squares(phi_t, grad, kinetic_flux_moment(f, pg, omega), omega)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_snapshot_bytes(tmp_path):
    a = np.arange(6, dtype=float).reshape(2, 3)
    p = tmp_path / "a.nv2d"
    write_snapshot(p, a)
    raw = p.read_bytes()
    assert raw[:4] == b"NV2D"
    assert raw[4:16] == bytes([1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0])
    assert raw[16:] == a.astype("<f8").tobytes()
    np.testing.assert_array_equal(read_snapshot(p), a)
