"""Stratified random samples of (xi, p) for property checks.

The kernel inequalities are tightest when |xi| -> 1 with vhat antiparallel to
xi, so half of the samples put |xi| on the strata 1 - 10^-k (k = 1..6) and a
quarter of those point p against xi.
"""
import numpy as np


def stratified_samples(rng, n, xi_max=1 - 1e-6, p_max=1e3, include_boundary=False,
                       dtype=np.float64):
    """Return (xi, p) arrays of shape (n, 2).

    |xi| is uniform on [0, xi_max] for half the samples and 1 - 10^-k otherwise;
    |p| is log-uniform on [1e-3, p_max] with 5% exact zeros.  With
    ``include_boundary`` the strata also contain |xi| = 1 exactly.
    """
    half = n // 2
    r = np.empty(n)
    r[:half] = rng.uniform(0.0, xi_max, half)
    k = rng.integers(1, 7, n - half)
    r[half:] = 1.0 - 10.0 ** (-k.astype(float))
    if include_boundary:
        r[half::7] = 1.0
    r = np.minimum(r, 1.0 if include_boundary else xi_max)
    a = rng.uniform(0, 2 * np.pi, n)
    xi = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)

    pa = 10.0 ** rng.uniform(-3, np.log10(p_max), n)
    pa[rng.random(n) < 0.05] = 0.0
    b = rng.uniform(0, 2 * np.pi, n)
    anti = rng.random(n) < 0.25
    # nearly antiparallel directions where the denominators are smallest
    b[anti] = a[anti] + np.pi + rng.normal(0, 1e-3, anti.sum())
    p = np.stack([pa * np.cos(b), pa * np.sin(b)], axis=-1)
    return xi.astype(dtype), p.astype(dtype)


def to_mpfr(a, precision=113):
    """Object array of gmpy2.mpfr values (binary128-sized mantissa by default)."""
    import gmpy2

    ctx = gmpy2.context(precision=precision)
    conv = np.frompyfunc(lambda v: gmpy2.mpfr(v, precision, context=ctx), 1, 1)
    return conv(np.asarray(a, dtype=float))
