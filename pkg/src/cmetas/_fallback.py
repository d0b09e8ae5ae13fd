"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np

FPMIN = 1e-300
EPS = 1e-16


def gamma_cf_scaled(order, z, max_iter=20000):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    b = z + 1.0 - order
    c = np.full_like(z, 1.0 / FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    worst = 0
    i = 1
    while i < max_iter and active.any():
        idx = np.flatnonzero(active)
        an = -i * (i - order)
        b[idx] += 2.0
        dd = an * d[idx] + b[idx]
        dd[np.abs(dd) < FPMIN] = FPMIN
        cc = b[idx] + an / c[idx]
        cc[np.abs(cc) < FPMIN] = FPMIN
        dd = 1.0 / dd
        delta = dd * cc
        d[idx], c[idx] = dd, cc
        h[idx] *= delta
        active[idx[np.abs(delta - 1.0) < EPS]] = False
        worst = i
        i += 1
    return h, worst


def volterra_trapezoid(g, kern, delta, h):
    g = np.asarray(g, dtype=float)
    kern = np.asarray(kern, dtype=float)
    n = len(g)
    y = np.empty(n)
    if n == 0:
        return y
    denom = 1.0 - 0.5 * delta * h * kern[0]
    y[0] = g[0]
    for k in range(1, n):
        # kern[k-1:0:-1] pairs lags k-1..1 with y[1..k-1]
        acc = 0.5 * kern[k] * y[0] + np.dot(kern[k - 1:0:-1], y[1:k])
        y[k] = (g[k] + delta * h * acc) / denom
    return y
