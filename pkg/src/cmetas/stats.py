"""Estimators and comparison metrics between simulation output and analytic curves."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import kolmogi

from .curves import Curve

KS_CRIT_5 = 1.358
KS_CRIT_1 = 1.628


@dataclass
class KSResult:
    statistic: float
    n: int
    crit_5: float
    crit_1: float

    def passes(self, level: float = 0.01, extra: float = 0.0) -> bool:
        crit = {0.05: self.crit_5, 0.01: self.crit_1}.get(level)
        if crit is None:
            crit = kolmogi(level) / np.sqrt(self.n)
        return self.statistic <= crit + extra


def ks_statistic(samples, cdf) -> KSResult:
    """One-sample Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    ``samples`` must be sorted; ``cdf`` maps an array to CDF values.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if np.any(np.diff(x) < 0):
        raise ValueError("samples must be sorted")
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    d = float(max(upper.max(), lower.max()))
    return KSResult(d, n, KS_CRIT_5 / np.sqrt(n), KS_CRIT_1 / np.sqrt(n))


def histogram_density(samples, bin_edges) -> Curve:
    """Density ``count / (N width)`` at bin centres with binomial errors.

    ``N`` is the total sample size, so out-of-range samples dilute the density.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    x = np.asarray(samples, dtype=float)
    N = x.size
    if N == 0:
        raise ValueError("empty sample")
    counts, _ = np.histogram(x, edges)
    width = np.diff(edges)
    phat = counts / N
    centres = np.sqrt(edges[1:] * edges[:-1]) if edges[0] > 0 else 0.5 * (edges[1:] + edges[:-1])
    return Curve(centres, phat / width, se=np.sqrt(phat * (1 - phat) / N) / width,
                 x_name="tau", y_name="density",
                 meta=dict(edges=edges, counts=counts, n=N))


@dataclass
class ComparisonReport:
    sup_abs_err: float
    l2_err: float
    n_points: int
    n_beyond_3se: int
    max_abs_z: float

    @property
    def ok(self) -> bool:
        return self.n_beyond_3se == 0

    def to_text(self, prefix: str = "") -> str:
        return "".join(f"{prefix}{k}: {v}\n" for k, v in asdict(self).items())


def compare_curves(empirical: Curve, analytic: Curve, rtol: float = 1e-9, se_floor=None) -> ComparisonReport:
    """Sup, RMS and 3-SE exceedance of ``empirical - analytic`` on a common grid.

    ``se_floor`` (scalar or per point) bounds the standard errors from below,
    typically with the error expected under the analytic curve so that empty
    bins do not produce zero errors.
    """
    if len(empirical) != len(analytic) or not np.allclose(empirical.grid, analytic.grid, rtol=rtol, atol=0):
        raise ValueError("curves must share the same grid")
    diff = empirical.values - analytic.values
    se = empirical.se if empirical.se is not None else np.zeros_like(diff)
    if se_floor is not None:
        se = np.maximum(se, se_floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.abs(diff) / se, np.where(diff == 0, 0.0, np.inf))
    n = len(diff)
    return ComparisonReport(
        sup_abs_err=float(np.max(np.abs(diff))) if n else 0.0,
        l2_err=float(np.sqrt(np.mean(diff**2))) if n else 0.0,
        n_points=n,
        n_beyond_3se=int(np.sum(z > 3.0)),
        max_abs_z=float(np.max(z)) if n else 0.0,
    )


def bin_average(func, bin_edges, **quad_kw) -> np.ndarray:
    """Average of ``func`` over each bin by adaptive quadrature."""
    from scipy.integrate import quad

    edges = np.asarray(bin_edges, dtype=float)
    opts = dict(epsabs=1e-13, epsrel=1e-10, limit=200)
    opts.update(quad_kw)
    return np.array([quad(func, lo, hi, **opts)[0] / (hi - lo)
                     for lo, hi in zip(edges[:-1], edges[1:])])


def null_se_density(analytic_density, bin_edges, n: int) -> np.ndarray:
    """Binomial SE of a histogram density when the analytic curve is true."""
    w = np.diff(np.asarray(bin_edges, dtype=float))
    prob = np.clip(np.asarray(analytic_density) * w, 0.0, 1.0)
    return np.sqrt(prob * (1 - prob) / n) / w


def null_se_probability(prob, n: int) -> np.ndarray:
    prob = np.clip(np.asarray(prob, dtype=float), 0.0, 1.0)
    return np.sqrt(prob * (1 - prob) / n)
