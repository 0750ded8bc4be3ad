"""Initial data: analytic field samplers and the named presets."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import DistributionGrid


@dataclass(frozen=True)
class AnalyticScalar:
    """A scalar function of x with its gradient and Hessian (vectorized over x[..., 2])."""

    value: Callable
    grad: Callable
    hess: Callable

    @classmethod
    def constant(cls, c):
        return cls(lambda x: np.full(np.shape(x)[:-1], float(c)),
                   lambda x: np.zeros(np.shape(x)),
                   lambda x: np.zeros(np.shape(x) + (2,)))

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def plane_sine(cls, amplitude, k):
        """amplitude * sin(k . x)."""
        k = np.asarray(k, dtype=float)

        def value(x):
            return amplitude * np.sin(np.asarray(x) @ k)

        def grad(x):
            return amplitude * np.cos(np.asarray(x) @ k)[..., None] * k

        def hess(x):
            return -amplitude * np.sin(np.asarray(x) @ k)[..., None, None] * np.outer(k, k)

        return cls(value, grad, hess)


def poly_bump(s2):
    """(1 - s^2)^4 for s^2 < 1, else 0: a C^3 compactly supported profile."""
    return np.where(s2 < 1.0, np.clip(1.0 - s2, 0.0, None) ** 4, 0.0)


@dataclass
class InitialData:
    f_in: Callable  # f_in(x[..., 2], p[..., 2])
    phi0: AnalyticScalar
    phi1: AnalyticScalar
    x_radius: float  # f_in vanishes for |x| >= x_radius (and phi data too, unless periodic)
    p_radius: float  # R0: f_in vanishes for |p| >= R0
    smoothness: str = "C^3, compact support in x and p"
    periodic: bool = False
    name: str = "custom"
    sup_f: float = field(default=0.0)

    def sample(self, xgrid, pgrid):
        X = xgrid.mesh()[:, :, None, None, :]
        P = pgrid.mesh()[None, None, :, :, :]
        f = np.asarray(self.f_in(X, P), dtype=float)
        f = np.broadcast_to(f, (xgrid.n, xgrid.n, pgrid.n, pgrid.n)).copy()
        return DistributionGrid(f=f, xgrid=xgrid, pgrid=pgrid, t=0.0)


def gaussian_bump(amplitude, x_radius, p_radius):
    """Single smooth bump A (1-|x|^2/Rx^2)^4 (1-|p|^2/Rp^2)^4, zero field data."""

    def f_in(x, p):
        sx = np.sum(np.asarray(x) ** 2, axis=-1) / x_radius**2
        sp = np.sum(np.asarray(p) ** 2, axis=-1) / p_radius**2
        return amplitude * poly_bump(sx) * poly_bump(sp)

    return InitialData(f_in=f_in, phi0=AnalyticScalar.zero(), phi1=AnalyticScalar.zero(),
                       x_radius=x_radius, p_radius=p_radius, name="gaussian-bump",
                       sup_f=amplitude)


def two_bump(amplitude, x_radius, p_radius, separation, drift):
    """Two bumps at x = (+-separation/2, 0) streaming towards each other with
    mean momentum (-+drift, 0)."""
    c = separation / 2

    def f_in(x, p):
        x = np.asarray(x)
        p = np.asarray(p)
        out = 0.0
        for sgn in (1.0, -1.0):
            sx = ((x[..., 0] - sgn * c) ** 2 + x[..., 1] ** 2) / x_radius**2
            sp = ((p[..., 0] + sgn * drift) ** 2 + p[..., 1] ** 2) / p_radius**2
            out = out + poly_bump(sx) * poly_bump(sp)
        return amplitude * out

    return InitialData(f_in=f_in, phi0=AnalyticScalar.zero(), phi1=AnalyticScalar.zero(),
                       x_radius=c + x_radius, p_radius=drift + p_radius, name="two-bump",
                       sup_f=amplitude)


def vacuum_wave(amplitude, wave_number):
    """f = 0 and a standing wave phi0 = A sin(k x1), phi1 = 0 on a periodic box."""
    return InitialData(f_in=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(p)[:-1])),
                       phi0=AnalyticScalar.plane_sine(amplitude, (wave_number, 0.0)),
                       phi1=AnalyticScalar.zero(), x_radius=0.0, p_radius=0.0,
                       periodic=True, name="vacuum-wave")


def zero_data():
    return InitialData(f_in=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(p)[:-1])),
                       phi0=AnalyticScalar.zero(), phi1=AnalyticScalar.zero(),
                       x_radius=0.0, p_radius=0.0, name="zero")


# preset name -> (constructor, parameter keys)
PRESETS = {
    "gaussian-bump": (gaussian_bump, ("amplitude", "x_radius", "p_radius")),
    "two-bump": (two_bump, ("amplitude", "x_radius", "p_radius", "separation", "drift")),
    "vacuum-wave": (vacuum_wave, ("wave_amplitude", "wave_number")),
    "zero": (zero_data, ()),
}
