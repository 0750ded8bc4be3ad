"""Compiled inner loops: semi-Lagrangian sweep, 4D cubic interpolation and
light-cone sums over stored history."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _lagrange_weights(u):
    # cubic Lagrange weights for nodes -1, 0, 1, 2 at offset u in [0, 1)
    w0 = -u * (u - 1.0) * (u - 2.0) / 6.0
    w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
    w2 = -(u + 1.0) * u * (u - 2.0) / 2.0
    w3 = (u + 1.0) * u * (u - 1.0) / 6.0
    return w0, w1, w2, w3


@njit(cache=True)
def _wrap(i, n, periodic):
    if periodic:
        return i % n
    if i < 0 or i >= n:
        return -1
    return i


@njit(cache=True)
def _snap(u):
    # offsets within round-off of a node are put on the node, so exact
    # node-to-node transport does not smear 1e-16 dust across the stencil
    r = math.floor(u + 0.5)
    if abs(u - r) < 1e-11:
        return r
    return u


@njit(cache=True)
def cubic4(f, x0, hx, nx, periodic, p0, hp, npp, X1, X2, P1, P2):
    """Tensor cubic Lagrange interpolation of f at one phase-space point.

    Stencil nodes outside a non-periodic grid contribute zero."""
    u = _snap((X1 - x0) / hx)
    v = _snap((X2 - x0) / hx)
    a = _snap((P1 - p0) / hp)
    b = _snap((P2 - p0) / hp)
    iu = int(math.floor(u))
    iv = int(math.floor(v))
    ia = int(math.floor(a))
    ib = int(math.floor(b))
    wu = _lagrange_weights(u - iu)
    wv = _lagrange_weights(v - iv)
    wa = _lagrange_weights(a - ia)
    wb = _lagrange_weights(b - ib)
    acc = 0.0
    for di in range(4):
        i = _wrap(iu - 1 + di, nx, periodic)
        if i < 0:
            continue
        for dj in range(4):
            j = _wrap(iv - 1 + dj, nx, periodic)
            if j < 0:
                continue
            wij = wu[di] * wv[dj]
            for dk in range(4):
                k = ia - 1 + dk
                if k < 0 or k >= npp:
                    continue
                wijk = wij * wa[dk]
                for dl in range(4):
                    l = ib - 1 + dl
                    if l < 0 or l >= npp:
                        continue
                    acc += wijk * wb[dl] * f[i, j, k, l]
    return acc


@njit(cache=True)
def cubic2(a, x0, h, n, periodic, X1, X2):
    """Tensor cubic Lagrange interpolation of a 2D node array; nodes off a
    non-periodic grid contribute zero."""
    u = _snap((X1 - x0) / h)
    v = _snap((X2 - x0) / h)
    iu = int(math.floor(u))
    iv = int(math.floor(v))
    wu = _lagrange_weights(u - iu)
    wv = _lagrange_weights(v - iv)
    acc = 0.0
    for di in range(4):
        i = _wrap(iu - 1 + di, n, periodic)
        if i < 0:
            continue
        for dj in range(4):
            j = _wrap(iv - 1 + dj, n, periodic)
            if j < 0:
                continue
            acc += wu[di] * wv[dj] * a[i, j]
    return acc


@njit(cache=True)
def cubic2_points(a, x0, h, n, periodic, pts):
    out = np.empty(pts.shape[0])
    for q in range(pts.shape[0]):
        out[q] = cubic2(a, x0, h, n, periodic, pts[q, 0], pts[q, 1])
    return out


@njit(cache=True)
def cubic4_points(f, x0, hx, nx, periodic, p0, hp, npp, pts):
    out = np.empty(pts.shape[0])
    for q in range(pts.shape[0]):
        out[q] = cubic4(f, x0, hx, nx, periodic, p0, hp, npp,
                        pts[q, 0], pts[q, 1], pts[q, 2], pts[q, 3])
    return out


@njit(cache=True)
def _bilinear_setup(X1, X2, x0, h, n, periodic):
    u = (X1 - x0) / h
    v = (X2 - x0) / h
    if periodic:
        i = int(math.floor(u))
        j = int(math.floor(v))
        fu = u - i
        fv = v - j
        return i % n, (i + 1) % n, j % n, (j + 1) % n, fu, fv, True
    if u < 0.0 or v < 0.0 or u > n - 1 or v > n - 1:
        return 0, 0, 0, 0, 0.0, 0.0, False
    i = min(int(math.floor(u)), n - 2)
    j = min(int(math.floor(v)), n - 2)
    return i, i + 1, j, j + 1, u - i, v - j, True


@njit(cache=True)
def _field4(s, X1, X2, t_a, dt, fa, fb, x0, h, n, periodic):
    """(phi, phi_t, phi_x1, phi_x2) at (s, X): bilinear in X, linear in s."""
    i0, i1, j0, j1, fu, fv, ok = _bilinear_setup(X1, X2, x0, h, n, periodic)
    if not ok:
        return 0.0, 0.0, 0.0, 0.0
    w = (s - t_a) / dt
    c00 = (1 - fu) * (1 - fv)
    c10 = fu * (1 - fv)
    c01 = (1 - fu) * fv
    c11 = fu * fv
    r0 = 0.0
    r1 = 0.0
    r2 = 0.0
    r3 = 0.0
    for q in range(4):
        va = c00 * fa[q, i0, j0] + c10 * fa[q, i1, j0] + c01 * fa[q, i0, j1] + c11 * fa[q, i1, j1]
        vb = c00 * fb[q, i0, j0] + c10 * fb[q, i1, j0] + c01 * fb[q, i0, j1] + c11 * fb[q, i1, j1]
        val = (1 - w) * va + w * vb
        if q == 0:
            r0 = val
        elif q == 1:
            r1 = val
        elif q == 2:
            r2 = val
        else:
            r3 = val
    return r0, r1, r2, r3


@njit(cache=True)
def _rhs(s, X1, X2, P1, P2, t_a, dt, fa, fb, x0, h, n, periodic):
    _, pt, g1, g2 = _field4(s, X1, X2, t_a, dt, fa, fb, x0, h, n, periodic)
    gam = math.sqrt(1.0 + P1 * P1 + P2 * P2)
    v1 = P1 / gam
    v2 = P2 / gam
    S = pt + v1 * g1 + v2 * g2
    return v1, v2, -S * P1 - g1 / gam, -S * P2 - g2 / gam


@njit(cache=True)
def trace_back(X1, X2, P1, P2, t_a, dt, fa, fb, x0, h, n, periodic):
    """One RK4 step from s = t_a + dt back to s = t_a."""
    s = t_a + dt
    hs = -dt
    a1, a2, a3, a4 = _rhs(s, X1, X2, P1, P2, t_a, dt, fa, fb, x0, h, n, periodic)
    b1, b2, b3, b4 = _rhs(s + hs / 2, X1 + hs / 2 * a1, X2 + hs / 2 * a2,
                          P1 + hs / 2 * a3, P2 + hs / 2 * a4, t_a, dt, fa, fb, x0, h, n, periodic)
    c1, c2, c3, c4 = _rhs(s + hs / 2, X1 + hs / 2 * b1, X2 + hs / 2 * b2,
                          P1 + hs / 2 * b3, P2 + hs / 2 * b4, t_a, dt, fa, fb, x0, h, n, periodic)
    d1, d2, d3, d4 = _rhs(s + hs, X1 + hs * c1, X2 + hs * c2,
                          P1 + hs * c3, P2 + hs * c4, t_a, dt, fa, fb, x0, h, n, periodic)
    return (X1 + hs / 6 * (a1 + 2 * b1 + 2 * c1 + d1),
            X2 + hs / 6 * (a2 + 2 * b2 + 2 * c2 + d2),
            P1 + hs / 6 * (a3 + 2 * b3 + 2 * c3 + d3),
            P2 + hs / 6 * (a4 + 2 * b4 + 2 * c4 + d4))


@njit(cache=True)
def sl_sweep(f, out, active, x0, hx, nx, periodic, p0, hp, npp, t_a, dt, fa, fb):
    """Semi-Lagrangian update of every active node; returns the clipped negative sum."""
    clipped = 0.0
    for i in range(nx):
        X1 = x0 + i * hx
        for j in range(nx):
            X2 = x0 + j * hx
            phib = fb[0, i, j]
            for k in range(npp):
                P1 = p0 + k * hp
                for l in range(npp):
                    if not active[i, j, k, l]:
                        out[i, j, k, l] = 0.0
                        continue
                    P2 = p0 + l * hp
                    Y1, Y2, Q1, Q2 = trace_back(X1, X2, P1, P2, t_a, dt, fa, fb, x0, hx, nx, periodic)
                    val = cubic4(f, x0, hx, nx, periodic, p0, hp, npp, Y1, Y2, Q1, Q2)
                    if val < 0.0:
                        clipped -= val
                        val = 0.0
                    elif val > 0.0:
                        # bicubic phi here: a bilinear value errs by O(h dt) per step
                        phia = cubic2(fa[0], x0, hx, nx, periodic, Y1, Y2)
                        val *= math.exp(3.0 * (phib - phia))
                    out[i, j, k, l] = val
    return clipped


@njit(cache=True)
def _bilinear_level(data, lev, i0, i1, j0, j1, fu, fv):
    return ((1 - fu) * (1 - fv) * data[lev, i0, j0] + fu * (1 - fv) * data[lev, i1, j0]
            + (1 - fu) * fv * data[lev, i0, j1] + fu * fv * data[lev, i1, j1])


@njit(cache=True)
def cone_scalar_sum(lev, wlev, qw, rho, ca, sa, wa, sth, wth, x1, x2,
                    data, x0, h, n, periodic):
    """sum over (tau, alpha, theta) nodes of qw * wa * wth * sin(theta) * data(tau, y).

    ``data`` holds stored levels; node tau interpolates linearly between
    levels ``lev`` and ``lev + 1`` with weight ``wlev`` on the latter."""
    total = 0.0
    for it in range(lev.shape[0]):
        l0 = lev[it]
        w1 = wlev[it]
        acc_t = 0.0
        for ia in range(ca.shape[0]):
            acc_a = 0.0
            for ith in range(sth.shape[0]):
                r = rho[it] * sth[ith]
                i0, i1, j0, j1, fu, fv, ok = _bilinear_setup(x1 + r * ca[ia], x2 + r * sa[ia],
                                                             x0, h, n, periodic)
                if not ok:
                    continue
                v = _bilinear_level(data, l0, i0, i1, j0, j1, fu, fv)
                if w1 != 0.0:
                    v = (1 - w1) * v + w1 * _bilinear_level(data, l0 + 1, i0, i1, j0, j1, fu, fv)
                acc_a += wth[ith] * sth[ith] * v
            acc_t += wa[ia] * acc_a
        total += qw[it] * acc_t
    return total


@njit(cache=True)
def _one_plus_xi_vhat(xi1, xi2, P1, P2, gam):
    xp = xi1 * P1 + xi2 * P2
    if xp >= 0.0:
        return 1.0 + xp / gam
    r = math.sqrt(xi1 * xi1 + xi2 * xi2)
    cr = xi1 * P2 - xi2 * P1
    return (1.0 + (P1 * P1 + P2 * P2) * ((1.0 - r) * (1.0 + r)) + cr * cr) / (gam * (gam - xp))


@njit(cache=True)
def cone_kinetic_sums(lev, wlev, qa, qb, rho, ca, sa, wa, sth, wth, x1, x2,
                      fhist, fld, x0, h, n, periodic, pvals, hp2, out):
    """Momentum-weighted cone sums for the derivative representation.

    Accumulates into ``out`` (length 6):
      out[0:3] += a-kernel terms (t, x1, x2) with node weight ``qa``
      out[3:6] += S(phi)/grad(phi) kernel terms with node weight ``qb``
    ``fhist`` is (levels, N, N, M, M); ``fld`` is (levels, 3, N, N) holding
    phi_t, phi_x1, phi_x2."""
    M = pvals.shape[0]
    gam = np.empty((M, M))
    for k in range(M):
        for l in range(M):
            gam[k, l] = math.sqrt(1.0 + pvals[k] ** 2 + pvals[l] ** 2)
    for it in range(lev.shape[0]):
        l0 = lev[it]
        w1 = wlev[it]
        l1 = l0 + 1 if w1 != 0.0 else l0
        for ia in range(ca.shape[0]):
            for ith in range(sth.shape[0]):
                st = sth[ith]
                xi1 = st * ca[ia]
                xi2 = st * sa[ia]
                r = rho[it] * st
                i0, i1, j0, j1, fu, fv, ok = _bilinear_setup(x1 + r * ca[ia], x2 + r * sa[ia],
                                                             x0, h, n, periodic)
                if not ok:
                    continue
                c00 = (1 - fu) * (1 - fv)
                c10 = fu * (1 - fv)
                c01 = (1 - fu) * fv
                c11 = fu * fv
                pt = 0.0
                g1 = 0.0
                g2 = 0.0
                for q in range(3):
                    v0 = (c00 * fld[l0, q, i0, j0] + c10 * fld[l0, q, i1, j0]
                          + c01 * fld[l0, q, i0, j1] + c11 * fld[l0, q, i1, j1])
                    v1 = (c00 * fld[l1, q, i0, j0] + c10 * fld[l1, q, i1, j0]
                          + c01 * fld[l1, q, i0, j1] + c11 * fld[l1, q, i1, j1])
                    v = (1 - w1) * v0 + w1 * v1
                    if q == 0:
                        pt = v
                    elif q == 1:
                        g1 = v
                    else:
                        g2 = v
                wA = qa[it] * wa[ia] * wth[ith] * st * hp2
                wB = qb[it] * wa[ia] * wth[ith] * st * hp2
                e00 = (1 - w1) * c00
                e10 = (1 - w1) * c10
                e01 = (1 - w1) * c01
                e11 = (1 - w1) * c11
                d00 = w1 * c00
                d10 = w1 * c10
                d01 = w1 * c01
                d11 = w1 * c11
                sA0 = 0.0
                sA1 = 0.0
                sA2 = 0.0
                sB = 0.0
                for k in range(M):
                    P1 = pvals[k]
                    for l in range(M):
                        fval = (e00 * fhist[l0, i0, j0, k, l] + e10 * fhist[l0, i1, j0, k, l]
                                + e01 * fhist[l0, i0, j1, k, l] + e11 * fhist[l0, i1, j1, k, l])
                        if w1 != 0.0:
                            fval += (d00 * fhist[l1, i0, j0, k, l] + d10 * fhist[l1, i1, j0, k, l]
                                     + d01 * fhist[l1, i0, j1, k, l] + d11 * fhist[l1, i1, j1, k, l])
                        if fval == 0.0:
                            continue
                        P2 = pvals[l]
                        g = gam[k, l]
                        v1_ = P1 / g
                        v2_ = P2 / g
                        D = _one_plus_xi_vhat(xi1, xi2, P1, P2, g)
                        gD2 = g * D * D
                        cr = xi1 * v2_ - xi2 * v1_
                        at = (v1_ * (xi1 + v1_) + v2_ * (xi2 + v2_)) / gD2
                        ax1 = ((xi1 + v1_) - v2_ * cr) / gD2
                        ax2 = ((xi2 + v2_) + v1_ * cr) / gD2
                        wt = 1.0 / (g * D) + at
                        S = pt + v1_ * g1 + v2_ * g2
                        cg = ((xi1 + v1_) * g1 + (xi2 + v2_) * g2) / (g * gD2)
                        sA0 += at * fval
                        sA1 += ax1 * fval
                        sA2 += ax2 * fval
                        sB += (wt * S + cg) * fval
                out[0] += wA * sA0
                out[1] += wA * sA1
                out[2] += wA * sA2
                out[3] += wB * sB
                out[4] += wB * xi1 * sB
                out[5] += wB * xi2 * sB


@njit(cache=True)
def disk_kinetic_sums(t, ca, sa, wa, sth, wth, x1, x2, f0, x0, h, n, periodic, pvals, hp2, out):
    """Initial-slice term t * int dalpha dtheta sin(theta) int K f_in dp,
    K = (1, xi1, xi2) / (gamma D); accumulates into out[0:3]."""
    M = pvals.shape[0]
    for ia in range(ca.shape[0]):
        for ith in range(sth.shape[0]):
            st = sth[ith]
            xi1 = st * ca[ia]
            xi2 = st * sa[ia]
            r = t * st
            i0, i1, j0, j1, fu, fv, ok = _bilinear_setup(x1 + r * ca[ia], x2 + r * sa[ia],
                                                         x0, h, n, periodic)
            if not ok:
                continue
            c00 = (1 - fu) * (1 - fv)
            c10 = fu * (1 - fv)
            c01 = (1 - fu) * fv
            c11 = fu * fv
            acc = 0.0
            for k in range(M):
                P1 = pvals[k]
                for l in range(M):
                    fval = (c00 * f0[i0, j0, k, l] + c10 * f0[i1, j0, k, l]
                            + c01 * f0[i0, j1, k, l] + c11 * f0[i1, j1, k, l])
                    if fval == 0.0:
                        continue
                    P2 = pvals[l]
                    g = math.sqrt(1.0 + P1 * P1 + P2 * P2)
                    D = _one_plus_xi_vhat(xi1, xi2, P1, P2, g)
                    acc += fval / (g * D)
            w = t * wa[ia] * wth[ith] * st * hp2
            out[0] += w * acc
            out[1] += w * xi1 * acc
            out[2] += w * xi2 * acc
