"""Characteristic curves of the Vlasov equation in a given field.

Along dX/ds = Phat, dP/ds = -F(s, X, P) with F = S(phi) P + grad phi / gamma
and S(phi) = phi_t + Phat.grad phi, the density obeys df/ds = 3 S(phi) f,
so e^{-3 phi} f is constant.  Samplers return (phi, phi_t, grad phi).
"""
import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from ._kernels import cubic2_points
from .errors import NumericError, OutOfDomainError

__all__ = [
    "CharState", "FieldSampler", "AnalyticField", "GridFieldSampler", "force",
    "flow_rhs", "char_rhs", "rk4_step", "integrate", "transported_density",
    "conformal_momentum_residual", "momentum_divergence_F", "write_trajectory_csv",
]


@dataclass(frozen=True)
class CharState:
    s: float
    X: np.ndarray
    P: np.ndarray
    f: float | None = None  # density carried along the curve, if tracked


class FieldSampler:
    """Interface: ``sample(s, x)`` -> (phi, phi_t, grad) with grad on the last axis."""

    def sample(self, s, x):
        raise NotImplementedError

    def contains(self, s, x):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    def weight_phi(self, s, x):
        """phi for the conformal weight exp(3 phi) of the transport step."""
        return self.sample(s, x)[0]


class AnalyticField(FieldSampler):
    """Closed-form field given vectorized callables of (s, x)."""

    def __init__(self, phi, phi_t, grad, box=None):
        self._phi, self._phi_t, self._grad = phi, phi_t, grad
        self.box = box  # half-width of the valid square, None for the whole plane

    @classmethod
    def zero(cls):
        z = lambda s, x: np.zeros(np.shape(x)[:-1])
        return cls(z, z, lambda s, x: np.zeros(np.shape(x)))

    @classmethod
    def uniform_rate(cls, alpha):
        """phi = alpha * s, spatially constant."""
        return cls(lambda s, x: alpha * s * np.ones(np.shape(x)[:-1]),
                   lambda s, x: alpha * np.ones(np.shape(x)[:-1]),
                   lambda s, x: np.zeros(np.shape(x)))

    def contains(self, s, x):
        if self.box is None:
            return np.ones(np.shape(x)[:-1], dtype=bool)
        return np.all(np.abs(x) <= self.box, axis=-1)

    def sample(self, s, x):
        x = np.asarray(x, dtype=float)
        if not np.all(self.contains(s, x)):
            raise OutOfDomainError(f"field sampled outside its box at s={s}")
        return self._phi(s, x), self._phi_t(s, x), self._grad(s, x)


class GridFieldSampler(FieldSampler):
    """Two stored field levels on a node grid: bilinear in x, linear in s.

    ``level_a``/``level_b`` are tuples (phi, phi_t, phi_x1, phi_x2) of 2D arrays
    at times ``t_a`` and ``t_a + dt``.  Outside the box the field is zero (the
    box is causally isolated from any source) unless the grid is periodic.
    """

    def __init__(self, grid, t_a, dt, level_a, level_b):
        self.grid, self.t_a, self.dt = grid, float(t_a), float(dt)
        self.a = np.stack([np.asarray(v, dtype=float) for v in level_a])
        self.b = np.stack([np.asarray(v, dtype=float) for v in level_b])

    def contains(self, s, x):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    def _bilinear(self, arr, x):
        g = self.grid
        u = (x[..., 0] - g.origin) / g.h
        v = (x[..., 1] - g.origin) / g.h
        n = g.n
        if g.periodic:
            i = np.floor(u).astype(int)
            j = np.floor(v).astype(int)
            fu, fv = u - i, v - j
            i0, i1 = i % n, (i + 1) % n
            j0, j1 = j % n, (j + 1) % n
            inside = np.ones(u.shape, dtype=bool)
        else:
            inside = (u >= 0) & (u <= n - 1) & (v >= 0) & (v <= n - 1)
            uc = np.clip(u, 0, n - 1)
            vc = np.clip(v, 0, n - 1)
            i0 = np.minimum(np.floor(uc).astype(int), n - 2)
            j0 = np.minimum(np.floor(vc).astype(int), n - 2)
            fu, fv = uc - i0, vc - j0
            i1, j1 = i0 + 1, j0 + 1
        out = ((1 - fu) * (1 - fv))[None] * arr[:, i0, j0] + (fu * (1 - fv))[None] * arr[:, i1, j0] \
            + ((1 - fu) * fv)[None] * arr[:, i0, j1] + (fu * fv)[None] * arr[:, i1, j1]
        return np.where(inside[None], out, 0.0)

    def sample(self, s, x):
        x = np.asarray(x, dtype=float)
        w = (s - self.t_a) / self.dt
        va = self._bilinear(self.a, x)
        vb = self._bilinear(self.b, x)
        v = (1 - w) * va + w * vb
        return v[0], v[1], np.stack([v[2], v[3]], axis=-1)

    def weight_phi(self, s, x):
        """phi by bicubic interpolation, linear in s.

        The conformal weight compares phi at a node with phi at a foot a
        fraction of a cell away; bilinear values would leave an O(h dt) error
        per step, which accumulates to first order over a run.
        """
        g = self.grid
        x = np.asarray(x, dtype=float)
        pts = np.ascontiguousarray(x.reshape(-1, 2))
        w = (s - self.t_a) / self.dt
        va = cubic2_points(self.a[0], g.origin, g.h, g.n, g.periodic, pts)
        vb = cubic2_points(self.b[0], g.origin, g.h, g.n, g.periodic, pts)
        return ((1 - w) * va + w * vb).reshape(x.shape[:-1])


def force(P, phi_t, grad):
    """F = S(phi) P + grad phi / gamma; returns (F, S(phi))."""
    P = np.asarray(P, dtype=float)
    gamma = np.sqrt(1 + np.sum(P * P, axis=-1))
    vh = P / gamma[..., None]
    S = phi_t + np.sum(vh * grad, axis=-1)
    return S[..., None] * P + grad / gamma[..., None], S


def flow_rhs(s, X, P, field):
    """Vectorized right-hand side: (dX, dP, S(phi))."""
    phi, phi_t, grad = field.sample(s, X)
    F, S = force(P, phi_t, grad)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(S))):
        raise NumericError(f"non-finite field sample at s={s}")
    gamma = np.sqrt(1 + np.sum(P * P, axis=-1))
    return P / gamma[..., None], -F, S


def char_rhs(state, field):
    """(dX, dP) at a single CharState."""
    dX, dP, _ = flow_rhs(state.s, state.X, state.P, field)
    return dX, dP


def rk4_step(s, X, P, h, field, f=None):
    """One classical RK4 step of size h (negative for backward tracing)."""
    k1x, k1p, S1 = flow_rhs(s, X, P, field)
    k2x, k2p, S2 = flow_rhs(s + h / 2, X + h / 2 * k1x, P + h / 2 * k1p, field)
    k3x, k3p, S3 = flow_rhs(s + h / 2, X + h / 2 * k2x, P + h / 2 * k2p, field)
    k4x, k4p, S4 = flow_rhs(s + h, X + h * k3x, P + h * k3p, field)
    Xn = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    Pn = P + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    if f is None:
        return Xn, Pn, None
    # df/ds = 3 S f, with S evaluated on the same stages
    q1 = 3 * S1 * f
    q2 = 3 * S2 * (f + h / 2 * q1)
    q3 = 3 * S3 * (f + h / 2 * q2)
    q4 = 3 * S4 * (f + h * q3)
    return Xn, Pn, f + h / 6 * (q1 + 2 * q2 + 2 * q3 + q4)


def integrate(t_from, t_to, init, field, dt):
    """RK4 trajectory from ``t_from`` to ``t_to`` (either direction).

    Returns the list of states including both ends; the final step is
    shortened so that the last ``s`` equals ``t_to`` exactly.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    span = t_to - t_from
    n = max(1, math.ceil(abs(span) / dt - 1e-12)) if span != 0 else 0
    sign = 1.0 if span >= 0 else -1.0
    st = replace(init, s=float(t_from), X=np.asarray(init.X, dtype=float),
                 P=np.asarray(init.P, dtype=float))
    traj = [st]
    for k in range(n):
        h = sign * dt if k < n - 1 else t_to - st.s
        try:
            X, P, f = rk4_step(st.s, st.X, st.P, h, field, st.f)
        except OutOfDomainError as exc:
            raise OutOfDomainError(str(exc), state=st) from None
        s = t_to if k == n - 1 else st.s + h
        st = CharState(s=s, X=X, P=P, f=None if f is None else float(f))
        if not np.all(field.contains(s, X)):
            raise OutOfDomainError(f"trajectory left the field domain at s={s}", state=st)
        traj.append(st)
    return traj


def transported_density(traj, f_in, phi0, phi_now):
    """f(t, x, p) = f_in(X(0), P(0)) exp(3 phi(t,x)) exp(-3 phi0(X(0))).

    ``f_in(x, p)`` and ``phi0(x)`` are callables; ``traj`` must have an end at s = 0.
    """
    if traj[0].s == 0.0:
        st = traj[0]
    elif traj[-1].s == 0.0:
        st = traj[-1]
    else:
        raise ValueError("trajectory is not anchored at s = 0")
    return float(f_in(st.X, st.P) * np.exp(3 * phi_now - 3 * phi0(st.X)))


def conformal_momentum_residual(traj, field):
    """max |d/ds(e^{2 phi}|P|^2) + 2 e^{2 phi} Phat.grad phi| over interior states."""
    if len(traj) < 3:
        raise ValueError("need at least three states")
    s = np.array([st.s for st in traj])
    X = np.array([st.X for st in traj])
    P = np.array([st.P for st in traj])
    phi = np.array([field.sample(si, xi)[0] for si, xi in zip(s, X)])
    grad = np.array([field.sample(si, xi)[2] for si, xi in zip(s, X)])
    Q = np.exp(2 * phi) * np.sum(P * P, axis=1)
    h0 = s[1:-1] - s[:-2]
    h1 = s[2:] - s[1:-1]
    # second-order derivative on a possibly non-uniform three-point stencil
    dQ = (-h1 / (h0 * (h0 + h1)) * Q[:-2] + (h1 - h0) / (h0 * h1) * Q[1:-1]
          + h0 / (h1 * (h0 + h1)) * Q[2:])
    gamma = np.sqrt(1 + np.sum(P * P, axis=1))
    rhs = -2 * np.exp(2 * phi) * np.sum(P * grad, axis=1) / gamma
    return float(np.max(np.abs(dQ - rhs[1:-1])))


def momentum_divergence_F(phi_t, grad, p, h):
    """Centered-difference div_p F at momentum p for fixed (phi_t, grad phi)."""
    p = np.asarray(p, dtype=float)
    grad = np.asarray(grad, dtype=float)
    div = 0.0
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        Fp, _ = force(p + e, phi_t, grad)
        Fm, _ = force(p - e, phi_t, grad)
        div = div + (Fp[..., k] - Fm[..., k]) / (2 * h)
    return div


def write_trajectory_csv(path, traj, field):
    """Columns s, X1, X2, P1, P2, phi, conserved_check (e^{-3 phi} f if tracked)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "X1", "X2", "P1", "P2", "phi", "conserved_check"])
        for st in traj:
            phi = float(field.sample(st.s, st.X)[0])
            cc = "" if st.f is None else repr(float(np.exp(-3 * phi) * st.f))
            w.writerow([repr(float(st.s)), repr(float(st.X[0])), repr(float(st.X[1])),
                        repr(float(st.P[0])), repr(float(st.P[1])), repr(phi), cc])
