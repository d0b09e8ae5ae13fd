"""Phenomenological laws, Omori kernel integrals and the conditional magnitude law.

All functions accept scalars or numpy arrays and are pure in the parameters.
Samplers take the uniform variates explicitly; callers own the RNG.
"""

from __future__ import annotations

import numpy as np
from scipy.special import exprel

from .params import ModelParams

LN2 = np.log(2.0)


def _check_mag(mag, p: ModelParams, name="magnitude"):
    mag = np.asarray(mag, dtype=float)
    if np.any(mag < p.m0):
        raise ValueError(f"{name} below reference magnitude m0={p.m0}")
    return mag


def _check_time(t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError(f"{name} must be nonnegative")
    return t


def _out(x):
    return x.item() if np.ndim(x) == 0 else x


# -- Gutenberg-Richter ---------------------------------------------------------

def gr_pdf(mag, p: ModelParams):
    """Gutenberg-Richter density ``beta exp(-beta (mag - m0))``."""
    mag = _check_mag(mag, p)
    return _out(p.beta * np.exp(-p.beta * (mag - p.m0)))


def gr_cdf(mag, p: ModelParams):
    mag = _check_mag(mag, p)
    return _out(-np.expm1(-p.beta * (mag - p.m0)))


def gr_sample(p: ModelParams, u):
    """Inverse-CDF draw of a GR magnitude from ``u`` in (0, 1)."""
    u = np.asarray(u, dtype=float)
    return _out(p.m0 - np.log1p(-u) / p.beta)


# -- Omori-Utsu ----------------------------------------------------------------

def omori_pdf(t, p: ModelParams):
    """Omori-Utsu density ``theta c^theta / (c + t)^(1 + theta)``."""
    t = _check_time(t)
    return _out(p.theta / p.c * (1.0 + t / p.c) ** (-1.0 - p.theta))


def omori_sample(p: ModelParams, u):
    """Delay time solving ``b(t) = u``: ``c ((1-u)^(-1/theta) - 1)``."""
    u = np.asarray(u, dtype=float)
    return _out(p.c * np.expm1(-np.log1p(-u) / p.theta))


def kernel_a(t, p: ModelParams):
    """Omori survival ``a(t) = (c / (c + t))^theta``."""
    t = _check_time(t)
    return _out(np.exp(-p.theta * np.log1p(t / p.c)))


def kernel_b(t, p: ModelParams):
    """Omori CDF ``b(t) = 1 - a(t)``."""
    t = _check_time(t)
    return _out(-np.expm1(-p.theta * np.log1p(t / p.c)))


def kernel_A(tau, p: ModelParams):
    """Integral of ``a`` over ``[0, tau]``.

    Written as ``c * l * exprel((1 - theta) l)`` with ``l = log(1 + tau/c)``,
    which equals ``[c^theta (tau + c)^(1-theta) - c] / (1 - theta)`` and tends
    continuously to ``c log(1 + tau/c)`` at ``theta = 1``.
    """
    tau = _check_time(tau, "tau")
    lg = np.log1p(tau / p.c)
    return _out(p.c * lg * exprel((1.0 - p.theta) * lg))


# -- productivity and magnitude correlation -------------------------------------

def productivity(mag, p: ModelParams):
    """Mean offspring count ``kappa exp(a (mag - m0))``."""
    mag = _check_mag(mag, p)
    return _out(p.kappa * np.exp(p.a * (mag - p.m0)))


def q_fun(mag, p: ModelParams):
    """Parent-magnitude modulation ``C1 (1 - 2 exp(-(beta - a)(mag - m0)))``."""
    mag = _check_mag(mag, p)
    return _out(p.c1 * (1.0 - 2.0 * np.exp(-(p.beta - p.a) * (mag - p.m0))))


def f_fun(mag_parent, mag_child, p: ModelParams):
    mag_parent = _check_mag(mag_parent, p, "parent magnitude")
    mag_child = _check_mag(mag_child, p, "child magnitude")
    q = q_fun(mag_parent, p)
    return _out(q * (1.0 - 2.0 * np.exp(-p.beta * (mag_child - p.m0))))


def cond_pdf(mag_child, mag_parent, p: ModelParams):
    """Child magnitude density given the parent magnitude: ``p(m'') (1 + f(m', m''))``."""
    mag_child = _check_mag(mag_child, p, "child magnitude")
    f = np.asarray(f_fun(mag_parent, mag_child, p))
    return _out(p.beta * np.exp(-p.beta * (mag_child - p.m0)) * (1.0 + f))


def cond_cdf(M, mag_parent, p: ModelParams):
    """Exact CDF ``(1 - u)(1 - q u)`` with ``u = exp(-beta (M - m0))``."""
    M = _check_mag(M, p)
    q = np.asarray(q_fun(mag_parent, p))
    u = np.exp(-p.beta * (M - p.m0))
    return _out(-np.expm1(-p.beta * (M - p.m0)) * (1.0 - q * u))


def cond_sample(mag_parent, p: ModelParams, u):
    """Inverse-CDF draw of a child magnitude.

    Takes the root in (0, 1] of ``q v^2 - (1 + q) v + (1 - u) = 0`` in the
    rationalised form ``2 (1 - u) / ((1 + q) + sqrt(D))``, which is free of
    cancellation and reduces to ``1 - u`` at ``q = 0``.
    """
    q = np.asarray(q_fun(mag_parent, p))
    u = np.asarray(u, dtype=float)
    one_minus_u = 1.0 - u
    disc = (1.0 + q) ** 2 - 4.0 * q * one_minus_u
    v = 2.0 * one_minus_u / ((1.0 + q) + np.sqrt(disc))
    return _out(p.m0 - np.log(v) / p.beta)


def cond_mode(mag_parent, p: ModelParams):
    """Location ``log(4q / (1 + q)) / beta + m0`` of the maximum of ``cond_pdf``.

    The slope at ``m0`` has the sign of ``3q - 1``, so the maximum is interior
    only for ``q > 1/3``; for ``q <= 1/3`` the density is decreasing.
    """
    q = np.asarray(q_fun(mag_parent, p))
    if np.any(q <= 1.0 / 3.0):
        raise ValueError("cond_pdf is decreasing when q(parent) <= 1/3; no interior mode")
    return _out(np.log(4.0 * q / (1.0 + q)) / p.beta + p.m0)
