"""Uniform node grids shared by the field and Vlasov solvers."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    """Square node grid: coordinates origin + h*k, k = 0..n-1, on both axes.

    Dirichlet grids include both box edges; periodic grids cover [-L, L)."""

    origin: float
    h: float
    n: int
    periodic: bool = False

    @classmethod
    def box(cls, L, n, periodic=False):
        if n < 3:
            raise ValueError("need at least 3 nodes per axis")
        h = 2 * L / n if periodic else 2 * L / (n - 1)
        return cls(origin=-float(L), h=float(h), n=int(n), periodic=periodic)

    @property
    def coords(self):
        return self.origin + self.h * np.arange(self.n)

    @property
    def half_width(self):
        return -self.origin

    def mesh(self):
        c = self.coords
        return np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1)


@dataclass(frozen=True)
class MomentumGrid:
    """Square momentum node grid on [-R, R]^2 including the edges."""

    origin: float
    h: float
    n: int

    @classmethod
    def from_radius(cls, R, n):
        if n < 5:
            raise ValueError("need at least 5 momentum nodes per axis")
        return cls(origin=-float(R), h=2 * float(R) / (n - 1), n=int(n))

    @property
    def radius(self):
        return -self.origin

    @property
    def coords(self):
        return self.origin + self.h * np.arange(self.n)

    def mesh(self):
        c = self.coords
        return np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1)

    def trapezoid_weights(self):
        w1 = np.full(self.n, self.h)
        w1[[0, -1]] *= 0.5
        return np.outer(w1, w1)


@dataclass
class DistributionGrid:
    """f(t, x1, x2, p1, p2) on the tensor product of a space and a momentum grid."""

    f: np.ndarray
    xgrid: Grid2D
    pgrid: MomentumGrid
    t: float = 0.0

    def __post_init__(self):
        shape = (self.xgrid.n, self.xgrid.n, self.pgrid.n, self.pgrid.n)
        if self.f.shape != shape:
            raise ValueError(f"f has shape {self.f.shape}, expected {shape}")

    @property
    def cell_volume(self):
        return self.xgrid.h**2 * self.pgrid.h**2
