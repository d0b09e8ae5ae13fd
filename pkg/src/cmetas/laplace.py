"""Laplace-domain machinery for the auxiliary function ``Nbar_-(t)``.

Contents: the complex upper incomplete gamma function, the Laplace transform
of the Omori density, the transform of ``Nbar_-``, its numerical Bromwich
inversion, and an independent time-domain Volterra solver used as an oracle.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import special

from . import kernels, laws
from .curves import Curve
from .params import DerivedConstants, ModelParams


class RefinementWarning(UserWarning):
    """Step halving changed a time-stepped solution by more than its tolerance."""


class TruncationError(RuntimeError):
    """Bromwich integral could not be truncated within tolerance."""


# -- incomplete gamma --------------------------------------------------------

def _check_right_half_plane(z, name="z"):
    z = np.asarray(z, dtype=np.complex128)
    if np.any(~np.isfinite(z)) or np.any(z.real <= 0):
        raise ValueError(f"{name} must have positive real part")
    return z


def _gamma_series(order, z):
    """``Gamma(order, z)`` for small ``|z|`` (order not a nonpositive integer)."""
    total = np.zeros_like(z)
    term = np.ones_like(z)  # (-z)^k / k!
    for k in range(200):
        contrib = term / (order + k)
        total += contrib
        if np.all(np.abs(contrib) <= 1e-17 * np.abs(total)):
            break
        term = term * (-z) / (k + 1)
    return special.gamma(order) - z**order * total


def _exp1_series(z):
    total = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 200):
        term = term * (-z) / k
        contrib = term / k
        total += contrib
        if np.all(np.abs(contrib) <= 1e-17 * np.abs(total)):
            break
    return -np.euler_gamma - np.log(z) - total


def _gamma_negint_small(kk, z):
    """``Gamma(-kk, z)`` for integer ``kk >= 0`` via the downward E1 relation."""
    e1 = _exp1_series(z)
    tail = np.zeros_like(z)
    for j in range(kk):
        tail += (-1) ** j * math.factorial(j) / z ** (j + 1)
    return (-1) ** kk / math.factorial(kk) * (e1 - np.exp(-z) * tail)


def _scaled_cf(order, z):
    h, iters = kernels.gamma_cf_scaled(float(order), np.ascontiguousarray(z))
    if iters >= 20000:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return h


def upper_gamma_complex(order: float, z):
    """Upper incomplete gamma ``Gamma(order, z)`` for ``Re z > 0``.

    The integral runs along the horizontal ray from ``z`` to ``+inf``. Uses a
    modified Lentz continued fraction for ``|z| >= 1`` and the power series
    otherwise. ``z**order`` is the principal branch.

    Parameters
    ----------
    order : float
        Real order (``-theta`` in every internal use).
    z : complex or array_like
        Argument(s) with positive real part.
    """
    z = _check_right_half_plane(z)
    shape = z.shape
    z = z.ravel()
    out = np.empty_like(z)
    big = np.abs(z) >= 1.0
    if big.any():
        zb = z[big]
        out[big] = np.exp(-zb) * zb**order * _scaled_cf(order, zb)
    if (~big).any():
        zs = z[~big]
        if order <= 0 and float(order).is_integer():
            out[~big] = _gamma_negint_small(int(-order), zs)
        else:
            out[~big] = _gamma_series(order, zs)
    out = out.reshape(shape)
    return out.item() if out.ndim == 0 else out


def upper_gamma_quad(order: float, z: complex) -> complex:
    """Quadrature oracle for ``Gamma(order, z)`` along ``t = z + x, x >= 0``."""
    from scipy.integrate import quad

    z = complex(z)
    if z.real <= 0:
        raise ValueError("z must have positive real part")

    def f(x, part):
        t = z + x
        v = np.exp(-t) * t ** (order - 1.0)
        return v.real if part == 0 else v.imag

    opts = dict(limit=500, epsabs=1e-15, epsrel=1e-12)
    re = quad(f, 0, np.inf, args=(0,), **opts)[0]
    im = quad(f, 0, np.inf, args=(1,), **opts)[0]
    return complex(re, im)


# -- transforms ---------------------------------------------------------------

def laplace_phi(s, p: ModelParams):
    """Laplace transform of the Omori density, ``theta (sc)^theta e^{sc} Gamma(-theta, sc)``."""
    s = _check_right_half_plane(s, "s")
    z = (s * p.c).ravel()
    th = p.theta
    out = np.empty_like(z)
    big = np.abs(z) >= 1.0
    if big.any():
        # the exp(-z) z^{-theta} prefactor of the fraction cancels exactly
        out[big] = th * _scaled_cf(-th, z[big])
    if (~big).any():
        zs = z[~big]
        if th.is_integer():
            out[~big] = th * zs**th * np.exp(zs) * _gamma_negint_small(int(th), zs)
        else:
            total = np.zeros_like(zs)
            term = np.ones_like(zs)
            for k in range(200):
                contrib = term / (k - th)
                total += contrib
                if np.all(np.abs(contrib) <= 1e-17 * np.abs(total)):
                    break
                term = term * (-zs) / (k + 1)
            out[~big] = th * np.exp(zs) * (zs**th * special.gamma(-th) - total)
    out = out.reshape(s.shape)
    return out.item() if out.ndim == 0 else out


def laplace_phi_quad(s: complex, p: ModelParams) -> complex:
    """Quadrature oracle ``int_0^inf exp(-s t) Phi(t) dt``."""
    from scipy.integrate import quad

    s = complex(s)
    if s.real <= 0:
        raise ValueError("s must have positive real part")
    opts = dict(limit=2000, epsabs=1e-14, epsrel=1e-12)
    if s.imag == 0:
        return complex(quad(lambda t: np.exp(-s.real * t) * laws.omori_pdf(t, p), 0, np.inf, **opts)[0])
    # oscillatory: integrate the damped kernel with a cos/sin weight
    om = s.imag

    def damped(t):
        return np.exp(-s.real * t) * p.theta / p.c * (1.0 + t / p.c) ** (-1.0 - p.theta)

    upper = 50.0 / s.real
    re = quad(damped, 0, upper, weight="cos", wvar=om, **opts)[0]
    im = -quad(damped, 0, upper, weight="sin", wvar=om, **opts)[0]
    return complex(re, im)


def laplace_nbar_minus(s, p: ModelParams, k: DerivedConstants):
    """Transform ``[Q - n(H-L) phi(s)] / (s [1 - delta phi(s)])``."""
    s = _check_right_half_plane(s, "s")
    phi = np.asarray(laplace_phi(s, p))
    val = (k.Q - k.n * (k.H - k.L) * phi) / (s * (1.0 - k.delta * phi))
    return val.item() if val.ndim == 0 else val


# -- Bromwich inversion ---------------------------------------------------------

def _gl_panels(edges, order=8):
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) / 2 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _panel_edges(xi_max, sigma, t_max, scale):
    """Panels graded near the origin, then capped at half a cos period."""
    cap = math.pi / t_max
    width = min(cap, sigma / 4.0, scale / 4.0)
    edges = [0.0]
    while edges[-1] < xi_max:
        edges.append(min(edges[-1] + width, xi_max))
        width = min(width * 1.25, cap)
    return np.asarray(edges)


class BromwichResult:
    """Inverted values plus the diagnostics of the truncation."""

    def __init__(self, values, sigma, xi_max, tail_bound, n_nodes):
        self.values = values
        self.sigma = sigma
        self.xi_max = xi_max
        self.tail_bound = tail_bound
        self.n_nodes = n_nodes


def bromwich_cosine(transform, t, sigma=None, xi_max=None, env_tol=1e-10,
                    tail_tol=1e-5, scale=1.0, max_xi=1e8) -> BromwichResult:
    """Invert a Laplace transform of a real function by the cosine Bromwich form.

    ``f(t) = (2 e^{sigma t} / pi) int_0^inf Re F(sigma + i xi) cos(xi t) d xi``.
    At ``t = 0`` this returns ``f(0+)``. ``xi_max`` is doubled until
    ``|Re F|`` on the last stretch drops below ``env_tol`` and the tail bound
    meets ``tail_tol``; the neglected tail
    is bounded by ``(2 e^{sigma t} / pi) C / xi_max`` with ``C`` the observed
    ``sup xi^2 |Re F|`` near ``xi_max``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    t_max = max(float(t.max()), 1e-12)
    sigma = 1.0 / t_max if sigma is None else float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    def re_f(xi):
        return np.real(transform(sigma + 1j * xi))

    def envelope(x):
        # sup of xi^2 |Re F| over [x/2, x]; Re F = O(xi^-2) makes this ~constant
        probe = np.linspace(0.5 * x, x, 64)
        return float(np.max(probe**2 * np.abs(re_f(probe))))

    amp = 2.0 * math.exp(sigma * t_max) / math.pi
    if xi_max is None:
        xi_max = 64.0 * max(sigma, 1.0 / scale)
        while xi_max < max_xi:
            env = envelope(xi_max)
            if env / xi_max**2 < env_tol and amp * env / xi_max <= tail_tol:
                break
            xi_max *= 2.0
    xi_max = float(xi_max)
    tail = amp * envelope(xi_max) / xi_max
    if tail > tail_tol:
        raise TruncationError(
            f"Bromwich tail bound {tail:.3g} exceeds {tail_tol:.3g} at xi_max={xi_max:.4g}"
        )
    nodes, weights = _gl_panels(_panel_edges(xi_max, sigma, t_max, scale))
    fw = re_f(nodes) * weights
    out = np.empty(t.size)
    chunk = max(1, int(4e6 // nodes.size))
    for i in range(0, t.size, chunk):
        tt = t[i:i + chunk]
        out[i:i + chunk] = np.cos(np.outer(tt, nodes)) @ fw
    out *= 2.0 * np.exp(sigma * t) / math.pi
    return BromwichResult(out, sigma, xi_max, tail, nodes.size)


def invert_nbar_minus(t_grid, p: ModelParams, k: DerivedConstants, sigma=None,
                      xi_max=None, tail_tol=1e-5) -> Curve:
    """``Nbar_-(t)`` on ``t_grid`` by numerical Bromwich inversion."""
    t_grid = np.asarray(t_grid, dtype=float)
    res = bromwich_cosine(lambda s: laplace_nbar_minus(s, p, k), t_grid, sigma=sigma,
                          xi_max=xi_max, tail_tol=tail_tol, scale=p.c)
    return Curve(t_grid, res.values, y_name="nbar_minus",
                 meta=dict(evaluator="bromwich", sigma=res.sigma, xi_max=res.xi_max,
                           tail_bound=res.tail_bound, nodes=res.n_nodes))


def nbar_minus_values(tau, p: ModelParams, k: DerivedConstants, tail_tol=1e-8):
    """``Nbar_-(tau)`` by inverting ``F(s) - Q/s`` and adding back ``Q``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    res = bromwich_cosine(lambda s: laplace_nbar_minus(s, p, k) - k.Q / s, tau,
                          tail_tol=tail_tol, scale=p.c)
    return k.Q + res.values


def integrated_nbar_minus(tau, p: ModelParams, k: DerivedConstants, tail_tol=1e-8):
    """``int_0^tau Nbar_-(t) dt`` by inverting ``F(s)/s - Q/s^2`` and adding ``Q tau``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    res = bromwich_cosine(lambda s: laplace_nbar_minus(s, p, k) / s - k.Q / s**2, tau,
                          tail_tol=tail_tol, scale=p.c)
    return k.Q * tau + res.values


# -- Volterra oracle ------------------------------------------------------------

def _volterra_solve(t, p, k):
    h = t[1] - t[0]
    g = k.Q - k.n * (k.H - k.L) * laws.kernel_b(t, p)
    kern = laws.omori_pdf(t, p)
    return kernels.volterra_trapezoid(np.ascontiguousarray(g), np.ascontiguousarray(kern),
                                      float(k.delta), float(h))


def volterra_nbar_minus(t_grid, p: ModelParams, k: DerivedConstants, check=True,
                        refine_tol=1e-5) -> Curve:
    """Solve ``N = Q - n b(t)(H-L) + delta (Phi * N)(t)`` by trapezoidal stepping.

    ``t_grid`` must be uniform and start at 0. With ``check`` the solve is
    repeated at half the step; a ``RefinementWarning`` is issued if the two
    differ by more than ``refine_tol`` on the common nodes.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or t[0] != 0.0:
        raise ValueError("t_grid must start at 0 and have at least two points")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform")
    y = _volterra_solve(t, p, k)
    meta = dict(evaluator="volterra", step=h)
    if check:
        fine = np.linspace(0.0, t[-1], 2 * t.size - 1)
        change = float(np.max(np.abs(_volterra_solve(fine, p, k)[::2] - y)))
        meta["halving_change"] = change
        if change > refine_tol:
            warnings.warn(f"Volterra step halving changed the solution by {change:.3g}",
                          RefinementWarning, stacklevel=2)
    return Curve(t, y, y_name="nbar_minus", meta=meta)


def _trapezoid(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def check_integral_identity(tau: float, p: ModelParams, k: DerivedConstants, nbar: Curve) -> float:
    """Absolute residual of the convolution identity for ``(a * Nbar_-)(tau)``.

    Compares the trapezoidal convolution with
    ``(tau/delta)[Q - n(H-L)] + (n(H-L)/delta) A(tau) + (1 - 1/delta) int_0^tau Nbar_-``.
    Only defined for ``delta > 0``.
    """
    if k.delta <= 0:
        raise ValueError("identity is degenerate for delta = 0")
    tau = float(tau)
    if tau < 0 or nbar.grid[0] > 0 or nbar.grid[-1] < tau * (1 - 1e-12):
        raise ValueError("nbar must cover [0, tau]")
    if tau == 0.0:
        return 0.0
    x = nbar.grid[nbar.grid < tau * (1 - 1e-12)]
    x = np.append(x, tau)
    y = np.interp(x, nbar.grid, nbar.values)
    conv = _trapezoid(laws.kernel_a(tau - x, p) * y, x)
    integral = _trapezoid(y, x)
    c0 = k.Q - k.n * (k.H - k.L)
    rhs = (tau / k.delta) * c0 + k.n * (k.H - k.L) / k.delta * laws.kernel_A(tau, p) \
        + (1.0 - 1.0 / k.delta) * integral
    return abs(conv - rhs)
