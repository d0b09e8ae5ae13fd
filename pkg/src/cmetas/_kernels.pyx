# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: complex incomplete-gamma continued fraction and the
trapezoidal Volterra stepper."""

import numpy as np

cdef extern from "complex.h" nogil:
    double cabs(double complex)

cdef double FPMIN = 1e-300
cdef double EPS = 1e-16


def gamma_cf_scaled(double order, double complex[::1] z, int max_iter=20000):
    """Continued fraction ``h`` with ``Gamma(order, z) = exp(-z) z**order * h``.

    Modified Lentz evaluation; intended for ``|z| >= 1`` and ``Re z > 0``.
    Returns ``(h, n_iter_max)``; ``n_iter_max`` equal to ``max_iter`` means
    some entry did not converge.
    """
    cdef Py_ssize_t k, npts = z.shape[0]
    cdef double complex b, c, d, h, delta, an
    cdef int i, worst = 0
    out = np.empty(npts, dtype=np.complex128)
    cdef double complex[::1] res = out
    with nogil:
        for k in range(npts):
            b = z[k] + 1.0 - order
            c = 1.0 / FPMIN
            d = 1.0 / b
            h = d
            i = 1
            while i < max_iter:
                an = -i * (i - order)
                b = b + 2.0
                d = an * d + b
                if cabs(d) < FPMIN:
                    d = FPMIN
                c = b + an / c
                if cabs(c) < FPMIN:
                    c = FPMIN
                d = 1.0 / d
                delta = d * c
                h = h * delta
                if cabs(delta - 1.0) < EPS:
                    break
                i += 1
            if i > worst:
                worst = i
            res[k] = h
    return out, worst


def volterra_trapezoid(double[::1] g, double[::1] kern, double delta, double h):
    """Solve ``y = g + delta * (kern * y)`` on a uniform grid by the trapezoid rule.

    ``kern[j]`` is the kernel at lag ``j*h``; ``g`` and ``kern`` share the grid.
    """
    cdef Py_ssize_t n = g.shape[0], k, j
    cdef double acc, denom
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    if n == 0:
        return out
    denom = 1.0 - 0.5 * delta * h * kern[0]
    with nogil:
        y[0] = g[0]
        for k in range(1, n):
            acc = 0.5 * kern[k] * y[0]
            for j in range(1, k):
                acc = acc + kern[k - j] * y[j]
            y[k] = (g[k] + delta * h * acc) / denom
    return out
