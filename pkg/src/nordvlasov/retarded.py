"""Retarded (light-cone) evaluation of phi and its first derivatives.

Backward-cone integrals use r = (t - tau) sin(theta), which turns
    int_{|y-x| < t-tau} g(tau, y) / sqrt((t-tau)^2 - |y-x|^2) dy
into (t - tau) int_0^{2 pi} d alpha int_0^{pi/2} g(tau, x + (t-tau) sin(theta) omega) sin(theta) d theta
with a smooth integrand.  tau and theta use composite Gauss-Legendre panels,
alpha the periodic trapezoid rule.
"""
import numpy as np

from . import _kernels
from .errors import InsufficientHistoryError
from .initial import AnalyticScalar

__all__ = [
    "ConeHistory", "gl_panels", "cone_nodes", "cone_quadrature", "angular_integral",
    "phi_hom", "phi_hom_derivatives", "phi_retarded", "dphi_representation", "dphi_all",
]

DEFAULT_ORDER = 2


def gl_panels(a, b, n_panels, order=DEFAULT_ORDER):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _alpha_nodes(n_alpha):
    a = 2 * np.pi * np.arange(n_alpha) / n_alpha
    return np.cos(a), np.sin(a), np.full(n_alpha, 2 * np.pi / n_alpha)


def cone_nodes(t, n_theta, n_tau, n_alpha=None, order=DEFAULT_ORDER):
    """Separable node sets (tau, w_tau), (alpha), (theta) for a cone of height t."""
    if t < 0:
        raise ValueError("cone height t must be >= 0")
    if n_alpha is None:
        n_alpha = 2 * n_theta * order
    tau, wtau = gl_panels(0.0, t, n_tau, order)
    th, wth = gl_panels(0.0, np.pi / 2, n_theta, order)
    ca, sa, wa = _alpha_nodes(n_alpha)
    return tau, wtau, (ca, sa, wa), (np.sin(th), wth)


def cone_quadrature(g, t, x, n_theta, n_tau, n_alpha=None, order=DEFAULT_ORDER):
    """int_0^t int_{|y-x|<t-tau} g(tau, y) / sqrt((t-tau)^2 - |y-x|^2) dy dtau.

    ``g(tau, y)`` is vectorized over y[..., 2]."""
    if t < 0:
        raise ValueError("cone height t must be >= 0")
    if t == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    tau, wtau, (ca, sa, wa), (sth, wth) = cone_nodes(t, n_theta, n_tau, n_alpha, order)
    om = np.stack([ca, sa], axis=-1)
    total = 0.0
    for tk, wk in zip(tau, wtau):
        rho = t - tk
        y = x + rho * sth[None, :, None] * om[:, None, :]
        vals = np.asarray(g(tk, y), dtype=float)
        vals = np.broadcast_to(vals, y.shape[:-1])
        total += wk * rho * np.sum(wa[:, None] * (wth * sth)[None, :] * vals)
    return float(total)


def angular_integral(a, n=256):
    """int_0^pi d theta / (1 - a cos theta) by the periodic trapezoid rule (|a| < 1)."""
    th = 2 * np.pi * np.arange(n) / n
    return float(np.pi / n * np.sum(1.0 / (1.0 - a * np.cos(th))))


def _disk_sums(fun, t, x, n_theta, n_alpha, order, power):
    # int dalpha int dtheta sin(theta)^power fun(x + t sin(theta) omega, omega)
    th, wth = gl_panels(0.0, np.pi / 2, n_theta, order)
    ca, sa, wa = _alpha_nodes(n_alpha)
    om = np.stack([ca, sa], axis=-1)
    s = np.sin(th)
    y = np.asarray(x, dtype=float) + t * s[None, :, None] * om[:, None, :]
    vals = fun(y, om[:, None, :])
    w = wa[:, None] * (wth * s**power)[None, :]
    return np.sum(w[(...,) + (None,) * (vals.ndim - 2)] * vals, axis=(0, 1))


def phi_hom(phi0, phi1, t, x, n_theta=64, n_alpha=None, order=4):
    """Free wave with data (phi0, phi1) at (t, x) via the two-dimensional Poisson formula.

    With W[g](t) = t int sin(theta) g(x + t sin(theta) omega), the solution is
    (W[phi1] + d_t W[phi0]) / (2 pi), and
    d_t W[g] = int sin(theta) g + t int sin^2(theta) omega.grad g.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if n_alpha is None:
        n_alpha = 2 * n_theta * order
    x = np.asarray(x, dtype=float)
    if t == 0:
        return float(phi0.value(x))
    v0 = _disk_sums(lambda y, om: phi0.value(y), t, x, n_theta, n_alpha, order, 1)
    d0 = _disk_sums(lambda y, om: np.sum(om * phi0.grad(y), axis=-1), t, x, n_theta, n_alpha, order, 2)
    v1 = _disk_sums(lambda y, om: phi1.value(y), t, x, n_theta, n_alpha, order, 1)
    return float((t * v1 + v0 + t * d0) / (2 * np.pi))


def phi_hom_derivatives(phi0, phi1, t, x, n_theta=64, n_alpha=None, order=4):
    """(d_t, d_x1, d_x2) of :func:`phi_hom`, differentiating under the substituted integrals.

    d_t^2 W[g] = 2 int sin^2 omega.grad g + t int sin^3 omega.H omega,
    d_xi W[g] = W[d_i g], d_xi d_t W[g] = int sin d_i g + t int sin^2 (H omega)_i.
    """
    if n_alpha is None:
        n_alpha = 2 * n_theta * order
    x = np.asarray(x, dtype=float)
    if t == 0:
        return float(phi1.value(x)), *map(float, phi0.grad(x))
    args = (t, x, n_theta, n_alpha, order)
    g1 = _disk_sums(lambda y, om: phi1.value(y), *args, 1)
    g1w = _disk_sums(lambda y, om: np.sum(om * phi1.grad(y), axis=-1), *args, 2)
    g0w = _disk_sums(lambda y, om: np.sum(om * phi0.grad(y), axis=-1), *args, 2)
    h0ww = _disk_sums(lambda y, om: np.einsum("...i,...ij,...j->...", om, phi0.hess(y), om), *args, 3)
    dt = (g1 + t * g1w) + (2 * g0w + t * h0ww)
    grad1 = _disk_sums(lambda y, om: phi1.grad(y), *args, 1)
    grad0 = _disk_sums(lambda y, om: phi0.grad(y), *args, 1)
    hom0 = _disk_sums(lambda y, om: np.einsum("...ij,...j->...i", phi0.hess(y), om), *args, 2)
    dx = t * grad1 + grad0 + t * hom0
    return float(dt / (2 * np.pi)), float(dx[0] / (2 * np.pi)), float(dx[1] / (2 * np.pi))


class ConeHistory:
    """Stored time levels of the source moment, the field and (optionally) f.

    Levels are appended in time order; with ``stride`` > 1 only every
    stride-th step is kept (``force=True`` keeps a level regardless).
    """

    def __init__(self, grid, pgrid=None, stride=1, phi0=None, phi1=None,
                 keep_f=False, f_dtype=np.float32):
        self.grid = grid
        self.pgrid = pgrid
        self.stride = int(stride)
        self.phi0 = phi0 if phi0 is not None else AnalyticScalar.zero()
        self.phi1 = phi1 if phi1 is not None else AnalyticScalar.zero()
        self.keep_f = keep_f
        self.f_dtype = f_dtype
        self._t, self._mu0, self._phi, self._fld, self._f = [], [], [], [], []
        self._cache = None

    def __len__(self):
        return len(self._t)

    @property
    def times(self):
        return np.array(self._t)

    def append(self, step, t, mu0, phi=None, grads=None, f=None, force=False):
        if self.stride > 1 and step % self.stride != 0 and not force:
            return False
        if self._t and t <= self._t[-1]:
            raise ValueError("history time stamps must increase")
        n = self.grid.n
        self._t.append(float(t))
        self._mu0.append(np.asarray(mu0, dtype=float))
        self._phi.append(np.zeros((n, n)) if phi is None else np.asarray(phi, dtype=float))
        self._fld.append(np.zeros((3, n, n)) if grads is None else np.stack(grads).astype(float))
        if self.keep_f:
            if f is None:
                raise ValueError("history keeps f but none was given")
            self._f.append(np.asarray(f, dtype=self.f_dtype))
        self._cache = None
        return True

    def _stacked(self):
        if self._cache is None:
            self._cache = {
                "mu0": np.ascontiguousarray(np.stack(self._mu0)),
                "phi": np.ascontiguousarray(np.stack(self._phi)),
                "fld": np.ascontiguousarray(np.stack(self._fld)),
            }
            if self.keep_f:
                self._cache["f"] = np.ascontiguousarray(np.stack(self._f))
        return self._cache

    def require(self, t):
        """Raise InsufficientHistoryError unless stored levels cover [0, t] without gaps."""
        ts = self.times
        if ts.size == 0:
            raise InsufficientHistoryError("history is empty")
        if ts[0] > 1e-12:
            raise InsufficientHistoryError(f"history starts at t={ts[0]:g}, gap [0, {ts[0]:g}]")
        if ts[-1] < t - 1e-9 * max(1.0, t):
            raise InsufficientHistoryError(f"history ends at t={ts[-1]:g}, gap [{ts[-1]:g}, {t:g}]")
        if ts.size > 2:
            d = np.diff(ts)
            # the last interval may be shorter when the final level was forced
            nominal = np.median(d)
            big = np.nonzero(d[ts[1:] <= t + 1e-12] > 1.5 * nominal)[0]
            if big.size:
                k = big[0]
                raise InsufficientHistoryError(f"history gap [{ts[k]:g}, {ts[k + 1]:g}]")

    def level_weights(self, tau):
        """Level index and linear weight of the next level for each tau."""
        ts = self.times
        tau = np.asarray(tau, dtype=float)
        if ts.size == 1:
            return np.zeros(tau.shape, dtype=np.int64), np.zeros(tau.shape)
        idx = np.clip(np.searchsorted(ts, tau, side="right") - 1, 0, ts.size - 2)
        w = (tau - ts[idx]) / (ts[idx + 1] - ts[idx])
        w = np.clip(w, 0.0, 1.0)
        return idx.astype(np.int64), w

    def phi_grid(self, t, x):
        """Grid phi at (t, x): bilinear in space, linear between stored levels."""
        self.require(t)
        lev, w = self.level_weights(np.array([t]))
        g = self.grid
        data = self._stacked()["phi"]
        ca = np.ones(1)
        sa = np.zeros(1)
        one = np.ones(1)
        return float(_kernels.cone_scalar_sum(lev, w, one, np.zeros(1), ca, sa, one,
                                              one, one, float(x[0]), float(x[1]),
                                              data, g.origin, g.h, g.n, g.periodic))


def _mu0_cone(hist, t, x, n_theta, n_tau, n_alpha, order):
    tau, wtau, (ca, sa, wa), (sth, wth) = cone_nodes(t, n_theta, n_tau, n_alpha, order)
    lev, w = hist.level_weights(tau)
    rho = t - tau
    g = hist.grid
    return _kernels.cone_scalar_sum(lev, w, wtau * rho, rho, ca, sa, wa, sth, wth,
                                    float(x[0]), float(x[1]), hist._stacked()["mu0"],
                                    g.origin, g.h, g.n, g.periodic)


def phi_retarded(hist, t, x, n_theta=32, n_tau=32, n_alpha=None, order=DEFAULT_ORDER):
    """phi_hom - 2 * (cone integral of mu0) from stored history."""
    hist.require(t)
    x = np.asarray(x, dtype=float)
    hom = phi_hom(hist.phi0, hist.phi1, t, x)
    if t == 0:
        return hom
    return hom - 2 * _mu0_cone(hist, t, x, n_theta, n_tau, n_alpha, order)


def dphi_all(hist, t, x, n_theta=16, n_tau=16, n_alpha=None, order=DEFAULT_ORDER):
    """(d_t phi, d_x1 phi, d_x2 phi) from the kernel representation.

    Terms: derivative of phi_hom; the initial-slice term with kernel
    (1, xi)/(gamma D); the a-kernel cone term weighted by 1/(t - tau); and
    the S(phi) / grad(phi) kernel cone term.  Signs: the a-term enters with
    + for d_t and - for d_xi, every other f-term with -2.
    """
    if not hist.keep_f:
        raise InsufficientHistoryError("history does not store f")
    hist.require(t)
    x = np.asarray(x, dtype=float)
    hom = np.array(phi_hom_derivatives(hist.phi0, hist.phi1, t, x))
    if t == 0:
        return tuple(hom)
    if n_alpha is None:
        n_alpha = 2 * n_theta * order
    g, pg = hist.grid, hist.pgrid
    st = hist._stacked()
    pvals = pg.coords
    hp2 = pg.h**2
    tau, wtau, (ca, sa, wa), (sth, wth) = cone_nodes(t, n_theta, n_tau, n_alpha, order)
    lev, w = hist.level_weights(tau)
    rho = t - tau
    kin = np.zeros(6)
    _kernels.cone_kinetic_sums(lev, w, wtau, wtau * rho, rho, ca, sa, wa, sth, wth,
                               float(x[0]), float(x[1]), st["f"], st["fld"],
                               g.origin, g.h, g.n, g.periodic, pvals, hp2, kin)
    data = np.zeros(3)
    _kernels.disk_kinetic_sums(t, ca, sa, wa, sth, wth, float(x[0]), float(x[1]),
                               st["f"][0], g.origin, g.h, g.n, g.periodic, pvals, hp2, data)
    d_t = hom[0] - 2 * data[0] + 2 * kin[0] - 2 * kin[3]
    d_x1 = hom[1] - 2 * data[1] - 2 * kin[1] - 2 * kin[4]
    d_x2 = hom[2] - 2 * data[2] - 2 * kin[2] - 2 * kin[5]
    return float(d_t), float(d_x1), float(d_x2)


def dphi_representation(hist, t, x, which, **quad):
    """One derivative ('t', 'x1' or 'x2') of phi from the kernel representation."""
    k = {"t": 0, "x1": 1, "x2": 2}[which]
    return dphi_all(hist, t, x, **quad)[k]
