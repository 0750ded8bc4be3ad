"""Phase-space geometry: relativistic momenta, light-cone coordinates and the
integral kernels of the retarded field representation.

All functions broadcast over leading axes; 2-vectors live on the last axis.
They keep the floating dtype of their inputs, so passing ``np.longdouble``
arrays evaluates every closed form in extended precision.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Momentum2", "ConeCoordinate", "VMKernelSet", "FieldKernelSet",
    "DerivativeDecomposition", "relativize", "wedge", "cone_coordinate",
    "one_plus_xi_vhat", "eval_vm_kernels", "eval_field_kernels",
    "operator_coefficients", "S_direction", "T_direction", "F_form",
    "decompose_F", "envelope_ratio",
]


def _float(a):
    # object arrays (of gmpy2.mpfr) pass through for high-precision checks
    a = np.asarray(a)
    if a.dtype != object and not np.issubdtype(a.dtype, np.floating):
        a = a.astype(np.float64)
    return a


def _sqrt(a):
    a = np.asarray(a)
    if a.dtype == object:
        import gmpy2
        return np.frompyfunc(gmpy2.sqrt, 1, 1)(a)
    return np.sqrt(a)


def _hypot(x, y):
    x = np.asarray(x)
    if x.dtype == object:
        return _sqrt(x * x + y * y)
    return np.hypot(x, y)


@dataclass(frozen=True)
class Momentum2:
    p: np.ndarray
    gamma: np.ndarray
    vhat: np.ndarray


@dataclass(frozen=True)
class ConeCoordinate:
    xi: np.ndarray
    omega: np.ndarray
    omega_perp: np.ndarray


@dataclass(frozen=True)
class VMKernelSet:
    et: np.ndarray
    es: np.ndarray
    bt: np.ndarray
    bs: np.ndarray


@dataclass(frozen=True)
class FieldKernelSet:
    """Kernels of the retarded representation of the first derivatives of phi.

    ``a_*``, ``b_*`` and ``c_*`` are the closed forms multiplying f, S(phi) f
    and (grad phi) f.  ``w_t`` and ``w_x`` are the S(phi) weights that the
    momentum integration by parts actually produces; they differ from ``b_t``
    and ``b_x`` by ``1/(gamma D) - 1/gamma + a`` and are what
    :func:`nordvlasov.retarded.dphi_representation` integrates.
    """

    a_t: np.ndarray
    b_t: np.ndarray
    c_t: np.ndarray
    a_x: np.ndarray
    b_x: np.ndarray
    c_x: np.ndarray
    w_t: np.ndarray
    w_x: np.ndarray


@dataclass(frozen=True)
class DerivativeDecomposition:
    coef_S: np.ndarray
    coef_T: np.ndarray


def relativize(p):
    """Lorentz factor and velocity of a momentum (or an array of them)."""
    p = _float(p)
    if p.shape[-1:] != (2,):
        raise ValueError("momentum must have a trailing axis of length 2")
    if not np.all(np.isfinite(p.astype(float))):
        raise DomainError("non-finite momentum")
    gamma = _sqrt(1 + p[..., 0] ** 2 + p[..., 1] ** 2)
    return Momentum2(p=p, gamma=gamma, vhat=p / gamma[..., None])


def wedge(v, w):
    v = np.asarray(v)
    w = np.asarray(w)
    return v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]


def cone_coordinate(xi, omega=None):
    """Wrap xi; omega defaults to xi/|xi| and is NaN where xi = 0."""
    xi = _float(xi)
    r = _hypot(xi[..., 0], xi[..., 1])
    if np.any(r > 1):
        raise DomainError("|xi| > 1 is outside the backward light cone")
    if omega is None:
        with np.errstate(invalid="ignore", divide="ignore"):
            omega = np.where((r > 0)[..., None], xi / r[..., None], np.nan)
    else:
        omega = np.broadcast_to(_float(omega), xi.shape)
    perp = np.stack([-omega[..., 1], omega[..., 0]], axis=-1)
    return ConeCoordinate(xi=xi, omega=omega, omega_perp=perp)


def _xi(xi):
    if isinstance(xi, ConeCoordinate):
        return xi.xi
    xi = _float(xi)
    if np.any(_hypot(xi[..., 0], xi[..., 1]) > 1):
        raise DomainError("|xi| > 1 is outside the backward light cone")
    return xi


def _mom(m):
    return m if isinstance(m, Momentum2) else relativize(m)


def one_plus_xi_vhat(xi, m):
    """1 + xi.vhat without cancellation.

    For xi.p < 0 the sum cancels; there we use
    gamma (gamma + xi.p) = (1 + |p|^2 (1-|xi|^2) + (xi^p)^2) / (gamma - xi.p),
    which follows from |xi|^2 |p|^2 = (xi.p)^2 + (xi^p)^2.
    """
    xi = _xi(xi)
    m = _mom(m)
    p, g = m.p, m.gamma
    xp = xi[..., 0] * p[..., 0] + xi[..., 1] * p[..., 1]
    r = _hypot(xi[..., 0], xi[..., 1])
    cross = xi[..., 0] * p[..., 1] - xi[..., 1] * p[..., 0]
    p2 = p[..., 0] ** 2 + p[..., 1] ** 2
    stable = (1 + p2 * ((1 - r) * (1 + r)) + cross**2) / (g * (g - xp))
    return np.where(xp < 0, stable, 1 + xp / g)


def eval_vm_kernels(xi, m):
    xi = _xi(xi)
    m = _mom(m)
    D = one_plus_xi_vhat(xi, m)
    g2 = m.gamma**2
    s = xi + m.vhat
    cr = wedge(xi, m.vhat)
    return VMKernelSet(
        et=s / (g2 * D**2)[..., None],
        es=s / D[..., None],
        bt=cr / (g2 * D**2),
        bs=cr / D,
    )


def eval_field_kernels(xi, m):
    """All kernels of the t, x1 and x2 derivative representations.

    The x2 set is not written out in closed form elsewhere, so we derive it
    from the x2 row of the (S, T1, T2) decomposition,
        d_x2 = (xi2 S + sqrt(1-|xi|^2)[-xi2 vh1 T1 + (1 + xi1 vh1) T2]) / D.
    Write T_k g as the divergence of (-xi_k, e_k) g / sqrt(1-|xi|^2) in
    (tau, y), integrate the T part by parts over the cone, then by parts in p
    for the S part (using S(f) = 3 S(phi) f - div_p(-F f)).  The T part yields
    the a-kernel
        a_x2 = [(xi2 + vh2) + vh1 (xi1 vh2 - xi2 vh1)] / (gamma D^2)
             = gamma (et_2 + vh1 bt),
    the index swap of the x1 kernel with the sign of the wedge flipped, and
    the S part gives b_x2 = xi2 b_t and c_x2 = xi2 c_t exactly as for x1.
    """
    xi = _xi(xi)
    m = _mom(m)
    D = one_plus_xi_vhat(xi, m)
    g = m.gamma
    vh = m.vhat
    gD2 = g * D**2
    cr = wedge(xi, vh)
    a_t = (vh[..., 0] * (xi[..., 0] + vh[..., 0])
           + vh[..., 1] * (xi[..., 1] + vh[..., 1])) / gD2
    b_t = 1 / g
    c_t = (xi + vh) / (g**3 * D**2)[..., None]
    a_x = np.stack([
        ((xi[..., 0] + vh[..., 0]) - vh[..., 1] * cr) / gD2,
        ((xi[..., 1] + vh[..., 1]) + vh[..., 0] * cr) / gD2,
    ], axis=-1)
    b_x = xi * b_t[..., None]
    c_x = xi[..., :, None] * c_t[..., None, :]
    # S(phi) weight after the p integration by parts: 1/(gamma D) from the
    # 3 S(phi) f source plus a_t from -F.grad_p of the kernel.
    w_t = 1 / (g * D) + a_t
    w_x = xi * w_t[..., None]
    return FieldKernelSet(a_t=a_t, b_t=b_t, c_t=c_t, a_x=a_x, b_x=b_x,
                          c_x=c_x, w_t=w_t, w_x=w_x)


def operator_coefficients(which, xi, m):
    """Coefficients of d_t, d_x1 or d_x2 in terms of S and (T1, T2).

    d g = coef_S * S g + sqrt(1-|xi|^2) * coef_T . (T1 g, T2 g)
    with S = d_tau + vhat.grad_y and T_k as in :func:`T_direction`.
    """
    xi = _xi(xi)
    m = _mom(m)
    if np.any(_hypot(xi[..., 0], xi[..., 1]) >= 1):
        raise DomainError("T_k is singular at |xi| = 1")
    D = one_plus_xi_vhat(xi, m)
    vh = m.vhat
    one = np.ones_like(D)
    if which == "t":
        cs = one
        ct = -vh
    elif which == "x1":
        cs = xi[..., 0]
        ct = np.stack([1 + xi[..., 1] * vh[..., 1], -xi[..., 0] * vh[..., 1]], axis=-1)
    elif which == "x2":
        cs = xi[..., 1]
        ct = np.stack([-xi[..., 1] * vh[..., 0], 1 + xi[..., 0] * vh[..., 0]], axis=-1)
    else:
        raise ValueError(f"unknown derivative {which!r}")
    return DerivativeDecomposition(coef_S=cs / D, coef_T=ct / D[..., None])


def S_direction(m):
    """(tau, y1, y2) direction vector of S = d_tau + vhat.grad_y."""
    vh = _mom(m).vhat
    return np.concatenate([np.ones_like(vh[..., :1]), vh], axis=-1)


def T_direction(k, xi):
    """(tau, y1, y2) direction of T_k = (d_yk - xi_k d_tau)/sqrt(1-|xi|^2), k in {1, 2}."""
    xi = _xi(xi)
    r = _hypot(xi[..., 0], xi[..., 1])
    if np.any(r >= 1):
        raise DomainError("T_k is singular at |xi| = 1")
    s = _sqrt((1 - r) * (1 + r))
    d = np.zeros(xi.shape[:-1] + (3,), dtype=xi.dtype)
    d[..., 0] = -xi[..., k - 1]
    d[..., k] = 1
    return d / s[..., None]


def F_form(i, xi, m, g, h):
    """xi_i D^2 (g + vhat.h) + xi_i (xi + vhat).h / gamma^2 for scalar g, 2-vector h."""
    xi = _xi(xi)
    m = _mom(m)
    g = np.asarray(g)
    h = np.asarray(h)
    D = one_plus_xi_vhat(xi, m)
    vh = m.vhat
    xii = xi[..., i - 1]
    vh_h = vh[..., 0] * h[..., 0] + vh[..., 1] * h[..., 1]
    s_h = (xi[..., 0] + vh[..., 0]) * h[..., 0] + (xi[..., 1] + vh[..., 1]) * h[..., 1]
    return xii * D**2 * (g + vh_h) + xii * s_h / m.gamma**2


def decompose_F(i, xi, m):
    """Coordinates (A1, A2, A3) of F_form(i, ...) in the basis
    {(0, omega_perp), (1, omega), (-1, omega)}, so that
    F(g, h) = A1 (omega_perp.h) + A2 (g + omega.h) + A3 (-g + omega.h).
    """
    if not isinstance(xi, ConeCoordinate):
        xi = cone_coordinate(xi)
    if np.any(_hypot(xi.xi[..., 0], xi.xi[..., 1]) == 0) or np.any(np.isnan(xi.omega)):
        raise DomainError("omega is undefined at xi = 0")
    m = _mom(m)
    w, wp = xi.omega, xi.omega_perp
    zero = np.zeros(w.shape[:-1], dtype=w.dtype)
    one = np.ones_like(zero)
    A1 = F_form(i, xi, m, zero, wp)
    A2 = F_form(i, xi, m, one, w) / 2
    A3 = F_form(i, xi, m, -one, w) / 2
    return A1, A2, A3


def envelope_ratio(xi, m):
    """(|a_t| + max_i |a_xi|) D^{3/2} (1+|p|^2) / (1+|p|); bounded on |xi| <= 1."""
    xi = _xi(xi)
    m = _mom(m)
    k = eval_field_kernels(xi, m)
    D = one_plus_xi_vhat(xi, m)
    pabs = _hypot(m.p[..., 0], m.p[..., 1])
    a = np.abs(k.a_t) + np.max(np.abs(k.a_x), axis=-1)
    return a * D**1.5 * m.gamma**2 / (1 + pabs)
