"""Invariance check of the productivity-weighted magnitude law and the L fit."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad

from . import laws
from .params import ModelParams

QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-12, limit=400)

# Magnitude integrals weighted by productivity decay at rate beta - a, not beta.
TAIL_E_FOLDS = 40.0


class QuadratureError(RuntimeError):
    pass


def _quad(func, lo, hi, what):
    val, err = quad(func, lo, hi, **QUAD_OPTS)
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"{what}: quadrature did not converge (value={val}, err={err})")
    return val


def _weighted_upper(p: ModelParams, lo: float) -> float:
    return lo + TAIL_E_FOLDS / (p.beta - p.a)


def _per_kappa_integral(mag_child: float, p: ModelParams, lo: float) -> float:
    """``int_lo^inf p(m') exp(a (m' - m0)) p(m'' | m') dm'``, i.e. the weighted integral over kappa."""

    def integrand(mp):
        return (
            p.beta * np.exp(-(p.beta - p.a) * (mp - p.m0))
            * laws.cond_pdf(mag_child, mp, p)
        )

    return _quad(integrand, lo, _weighted_upper(p, lo), "productivity-weighted magnitude integral")


def integral_IA(mag_child: float, p: ModelParams) -> float:
    """``I_A(m'') = int_{m0}^inf p(m') rho(m') p(m''|m') dm'`` by quadrature."""
    laws._check_mag(mag_child, p)
    return p.kappa * _per_kappa_integral(float(mag_child), p, p.m0)


def integral_IB(mag_child, p: ModelParams):
    """Closed form ``p(m'') n [H + C1 (1 - 2 e^{-beta(m''-m0)}) (H - H^2)]``."""
    mag_child = laws._check_mag(mag_child, p)
    H = np.exp(-(p.beta - p.a) * (p.m - p.m0))
    w = np.exp(-p.beta * (mag_child - p.m0))
    val = p.beta * w * p.branching_ratio * (H + p.c1 * (1.0 - 2.0 * w) * (H - H * H))
    return laws._out(val)


def integral_IB_quad(mag_child: float, p: ModelParams) -> float:
    """``I_B(m'') = int_m^inf p(m') rho(m') p(m''|m') dm'`` by quadrature."""
    laws._check_mag(mag_child, p)
    return p.kappa * _per_kappa_integral(float(mag_child), p, p.m)


def default_grid(p: ModelParams, points: int = 400, span: float = 6.0):
    return np.linspace(p.m0, p.m0 + span, points)


def check_invariance(p: ModelParams, grid=None) -> float:
    """Max over the grid of ``|I_A(m'') / (n p(m'')) - 1|``.

    Works in units of kappa so that the kappa = 0 limit stays defined.
    """
    grid = default_grid(p) if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid < p.m0) or np.any(grid > p.m0 + 40.0 / p.beta):
        raise ValueError("grid must lie within [m0, m0 + 40/beta]")
    n_per_kappa = p.beta / (p.beta - p.a)
    errs = [
        abs(_per_kappa_integral(x, p, p.m0) / (n_per_kappa * laws.gr_pdf(x, p)) - 1.0)
        for x in grid
    ]
    return float(max(errs))


@dataclass
class CalibrationReport:
    L_fit: float
    objective_value: float
    max_rel_err_IA: float
    grid_spec: str
    H: float
    ratio_min: float
    ratio_max: float

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            lines.append(f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CalibrationReport":
        d = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            k, _, v = line.partition(":")
            d[k.strip()] = v.strip()
        return cls(
            L_fit=float(d["L_fit"]),
            objective_value=float(d["objective_value"]),
            max_rel_err_IA=float(d["max_rel_err_IA"]),
            grid_spec=d["grid_spec"],
            H=float(d["H"]),
            ratio_min=float(d["ratio_min"]),
            ratio_max=float(d["ratio_max"]),
        )


def fit_L(p: ModelParams, grid=None, check: bool = True) -> CalibrationReport:
    """Least-squares constant ``L`` in ``I_B(m'') ~ n L p(m'')``.

    The unweighted L2 objective ``int (I_B - n L p)^2 dm''`` is quadratic in
    ``L`` and is minimised by ``L = int I_B p / (n int p^2)``. Both integrals
    are computed by quadrature; ``I_B / n`` is used so that ``n = 0`` is legal.
    """
    H = float(np.exp(-(p.beta - p.a) * (p.m - p.m0)))
    upper = p.m0 + 40.0 / p.beta

    def ratio(x):
        # I_B / (n p)
        w = np.exp(-p.beta * (x - p.m0))
        return H + p.c1 * (1.0 - 2.0 * w) * (H - H * H)

    def p2(x):
        return laws.gr_pdf(x, p) ** 2

    num = _quad(lambda x: ratio(x) * p2(x), p.m0, upper, "fit_L numerator")
    den = _quad(p2, p.m0, upper, "fit_L denominator")
    L = num / den
    n = p.branching_ratio
    obj = _quad(lambda x: (n * (ratio(x) - L)) ** 2 * p2(x), p.m0, upper, "fit_L objective")

    grid = default_grid(p) if grid is None else np.asarray(grid, dtype=float)
    r = ratio(grid)
    max_err = check_invariance(p, grid) if check else float("nan")
    return CalibrationReport(
        L_fit=float(L),
        objective_value=float(obj),
        max_rel_err_IA=max_err,
        grid_spec=f"{len(grid)} uniform points on [{grid[0]:g}, {grid[-1]:g}]",
        H=H,
        ratio_min=float(r.min()),
        ratio_max=float(r.max()),
    )
