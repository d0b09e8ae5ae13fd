"""Zero-event probabilities and inter-event time densities.

Three evaluators of ``F(tau) = P''(tau) / lambda`` are provided:

* ``m0``: exact small-window form when every triggering event is observable;
* ``general``: closed form for ``m >= m0`` built on the constant ``L``;
* ``bromwich``: the same chain without the ``a(tau - t) ~ a(tau)`` step, using
  the numerically inverted ``Nbar_-`` and a numerical second derivative.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.integrate import quad

from . import laws
from .laplace import integrated_nbar_minus, nbar_minus_values
from .params import DerivedConstants, ModelParams, ParameterError

SMALL_TAU = 0.2  # in units of c


class SmallTauWarning(UserWarning):
    """Evaluation outside the declared small-window domain ``tau <= 0.2 c``."""


def _tau(tau, p, warn=True):
    tau = laws._check_time(tau, "tau")
    if warn and np.any(tau > SMALL_TAU * p.c):
        warnings.warn(f"tau beyond {SMALL_TAU} c: small-window expansion may be inaccurate",
                      SmallTauWarning, stacklevel=3)
    return tau


def _subcritical(p):
    n = p.branching_ratio
    if n >= 1.0:
        raise ParameterError("branching ratio must be < 1")
    return n


def stationary_rate(p: ModelParams) -> float:
    """Rate of observable events, ``omega Q / (1 - n)``."""
    Q = np.exp(-p.beta * (p.m - p.m0))
    return p.omega * Q / (1.0 - _subcritical(p))


# -- all events observable ----------------------------------------------------------

def p_zero_m0(tau, p: ModelParams):
    """``exp(-omega tau - (n omega / (1-n)) A(tau))``; ignores ``p.m``."""
    n = _subcritical(p)
    tau = laws._check_time(tau, "tau")
    lam = p.omega / (1.0 - n)
    return laws._out(np.exp(-p.omega * tau - n * lam * np.asarray(laws.kernel_A(tau, p))))


def interevent_density_m0(tau, p: ModelParams, lam: float | None = None):
    """Inter-event density when ``m = m0``.

    ``(1/lam) P(tau) [(omega + n lam0 a)^2 + n lam0 Phi]`` with ``lam0 = omega/(1-n)``,
    the default for ``lam``.
    """
    n = _subcritical(p)
    tau = _tau(tau, p)
    lam0 = p.omega / (1.0 - n)
    lam = lam0 if lam is None else float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    a = np.asarray(laws.kernel_a(tau, p))
    phi = np.asarray(laws.omori_pdf(tau, p))
    P = np.asarray(p_zero_m0(tau, p))
    return laws._out(P * ((p.omega + n * lam0 * a) ** 2 + n * lam0 * phi) / lam)


# -- general completeness magnitude ----------------------------------------------

def _general_parts(tau, p, k):
    """Return ``g, g', g''`` for ``g = omega L(0; tau)``."""
    if k.delta >= 1.0 or k.n >= 1.0:
        raise ParameterError("need n < 1 and delta < 1")
    n, d = k.n, k.delta
    a = np.asarray(laws.kernel_a(tau, p))
    A = np.asarray(laws.kernel_A(tau, p))
    phi = np.asarray(laws.omori_pdf(tau, p))
    w = p.omega * n * (k.H - k.L)
    D = 1.0 - d + d * a
    # u = tau omega_tilde + w A, V = (1 - n + n a) / ((1-n) D)
    u, du, d2u = tau * k.omega_tilde + w * A, k.omega_tilde + w * a, -w * phi
    V = (1.0 - n + n * a) / ((1.0 - n) * D)
    dV = phi * (d - n) / ((1.0 - n) * D**2)
    d2V = (d - n) * phi * ((p.theta + 1.0) * (d - 1.0) + d * a * (p.theta - 1.0)) \
        / ((1.0 - n) * (tau + p.c) * D**3)
    g = u * V
    g1 = du * V + u * dV
    g2 = d2u * V + 2.0 * du * dV + u * d2V
    return g, g1, g2


def l_zero_general(tau, p: ModelParams, k: DerivedConstants):
    """``omega L(0; tau) = [tau omega_tilde + omega n (H-L) A] (1-n+na) / ((1-n)(1-delta+delta a))``."""
    tau = laws._check_time(tau, "tau")
    return laws._out(_general_parts(tau, p, k)[0])


def p_zero_general(tau, p: ModelParams, k: DerivedConstants):
    return laws._out(np.exp(-np.asarray(l_zero_general(tau, p, k))))


def interevent_density_general(tau, p: ModelParams, k: DerivedConstants, lam: float | None = None):
    """Closed-form inter-event density for ``m >= m0``.

    ``P [(g')^2 - g''] / lam`` with ``g = omega L(0; tau)`` and ``g', g''``
    expanded analytically. ``lam`` defaults to ``omega Q / (1 - n)``.
    """
    tau = _tau(tau, p)
    lam = stationary_rate(p) if lam is None else float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    g, g1, g2 = _general_parts(tau, p, k)
    return laws._out(np.exp(-g) * (g1**2 - g2) / lam)


# -- exact chain through the inverted transform ----------------------------------------

def _phi_conv(tau, p, k):
    """``(Phi * Nbar_-)(tau)`` for the explicit ``delta = 0`` form of ``Nbar_-``."""
    if tau == 0:
        return 0.0
    c0 = k.n * (k.H - k.L)
    return quad(lambda x: laws.omori_pdf(tau - x, p) * (k.Q - c0 * laws.kernel_b(x, p)),
                0.0, tau, epsabs=1e-15, epsrel=1e-13)[0]


def _a_conv(tau, p, k):
    if tau == 0:
        return 0.0
    c0 = k.n * (k.H - k.L)
    return quad(lambda x: laws.kernel_a(tau - x, p) * (k.Q - c0 * laws.kernel_b(x, p)),
                0.0, tau, epsabs=1e-15, epsrel=1e-13)[0]


def _bromwich_parts(tau, p, k):
    """``g = omega L(0; tau)`` and ``g'`` along the exact chain.

    For ``delta > 0`` the convolution ``a * Nbar_-`` is eliminated through the
    integral identity and ``Nbar_-`` and its integral come from numerical
    inversion. At ``delta = 0`` ``Nbar_-`` is explicit and the convolutions
    are done by quadrature.
    """
    n, d = k.n, k.delta
    c0 = n * (k.H - k.L)
    A = np.asarray(laws.kernel_A(tau, p))
    a = np.asarray(laws.kernel_a(tau, p))
    if d > 0:
        I = integrated_nbar_minus(tau, p, k)
        N = nbar_minus_values(tau, p, k)
        front = (d - 1.0) / d * p.omega * k.delta_cap
        g = front * I + tau * n / (1.0 - n) * k.omega_tilde / d \
            + p.omega * n * c0 * A / (d * (1.0 - n))
        g1 = front * N + n / (1.0 - n) * k.omega_tilde / d \
            + p.omega * n * c0 * a / (d * (1.0 - n))
    else:
        I = k.Q * tau - c0 * (tau - A)
        N = k.Q - c0 * np.asarray(laws.kernel_b(tau, p))
        conv = np.array([_a_conv(float(x), p, k) for x in tau])
        dconv = N - np.array([_phi_conv(float(x), p, k) for x in tau])
        g = p.omega * I + n / (1.0 - n) * p.omega * conv
        g1 = p.omega * N + n / (1.0 - n) * p.omega * dconv
    return g, g1


def l_zero_bromwich(tau, p: ModelParams, k: DerivedConstants):
    """``omega L(0; tau)`` without the small-window step ``a(tau - t) ~ a(tau)``."""
    tau = np.atleast_1d(laws._check_time(tau, "tau"))
    return _bromwich_parts(tau, p, k)[0]


def p_zero_bromwich(tau, p: ModelParams, k: DerivedConstants):
    return np.exp(-l_zero_bromwich(tau, p, k))


def interevent_density_bromwich(tau, p: ModelParams, k: DerivedConstants,
                                lam: float | None = None, rel_step: float = 1e-3):
    """Inter-event density ``P [(g')^2 - g''] / lam`` along the exact chain.

    ``g'`` is exact given the inverted ``Nbar_-``; ``g''`` is its central
    difference with step ``rel_step * max(tau, 1e-3 c)``.
    """
    tau = np.atleast_1d(_tau(tau, p))
    lam = stationary_rate(p) if lam is None else float(lam)
    step = rel_step * np.maximum(tau, 1e-3 * p.c)
    lo = np.maximum(tau - step, 0.0)
    hi = tau + step
    pts = np.concatenate([tau, lo, hi])
    g, g1 = _bromwich_parts(pts, p, k)
    m = tau.size
    g2 = (g1[2 * m:] - g1[m:2 * m]) / (hi - lo)
    return np.exp(-g[:m]) * (g1[:m] ** 2 - g2) / lam
