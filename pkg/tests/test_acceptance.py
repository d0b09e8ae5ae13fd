"""Acceptance suite; one PASS/FAIL line per criterion is printed at the end of the run.

Criteria whose analytic target disagrees with the simulated process beyond
Monte Carlo error are marked ``xfail(strict=True)``: they are run at full
tolerance and reported as FAIL.
"""

import time
import warnings

import numpy as np
import pytest
from scipy.special import kolmogi

from cmetas import analytics as an
from cmetas import calibration as cal
from cmetas import laplace as lp
from cmetas import laws, simulator as sim, stats
from cmetas.curves import Curve
from cmetas.params import derived_constants, reference_params
from conftest import mc_params, record

pytestmark = pytest.mark.filterwarnings("ignore::cmetas.analytics.SmallTauWarning")

# Monte Carlo protocol for criteria 5 and 6
N_WINDOWS = 100_000
P_REPLICAS = 4
N_GAPS = 200_000
GAP_REPLICAS = 10
N_BINS = 10


def fd2(f, tau, h):
    return (f(tau + h) - 2.0 * f(tau) + f(tau - h)) / h**2


def test_criterion_1_constants():
    t0 = time.perf_counter()
    p = reference_params()
    rep = cal.fit_L(p, check=False)
    k = derived_constants(p, rep.L_fit)
    dt = time.perf_counter() - t0
    okH = record(1, "H", abs(k.H - 0.8404) <= 1e-4, f"H={k.H:.5f}")
    okL = record(1, "L", abs(rep.L_fit - 0.8032) <= 0.01, f"L={rep.L_fit:.5f}")
    okt = record(1, "runtime", dt < 1.0, f"{dt:.3f}s")
    assert okH and okL and okt


def test_criterion_2_invariance():
    t0 = time.perf_counter()
    errs = {c1: cal.check_invariance(reference_params(c1=c1)) for c1 in (0.0, 0.2, 0.5, 0.8)}
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    ok = record(2, "max rel err", worst < 1e-8, f"{worst:.2e} over C1 in {sorted(errs)}")
    okt = record(2, "runtime", dt < 10.0, f"{dt:.2f}s")
    assert ok and okt


def test_criterion_3_landmarks():
    p = reference_params(a=2.0493 - 0.4648, m0=1.8, m=1.8)
    mbar = derived_constants(p, 1.0).mbar
    q0 = laws.q_fun(mbar, p)
    pf = reference_params(beta=1.9648, a=1.0, m0=1.8, m=1.8)
    froot = np.log(2.0) / pf.beta + pf.m0
    f0 = laws.f_fun(4.0, froot, pf)
    ok1 = record(3, "q-root", abs(mbar - 3.2913) <= 1e-4 and abs(q0) < 1e-14, f"{mbar:.5f}")
    ok2 = record(3, "f-root", abs(froot - 2.1527) <= 1e-4 and abs(f0) < 1e-14, f"{froot:.5f}")
    assert ok1 and ok2


def test_criterion_4_simulator_laws():
    t0 = time.perf_counter()
    p = mc_params()
    cat = sim.simulate_catalog(p, 1e6, seed=2024)
    n_events = int(cat.in_window().sum())
    checks = sim.law_checks([cat], p)
    dt = time.perf_counter() - t0
    for c in checks:
        record(4, c.name, c.passed, f"stat={c.statistic:.4g} thr={c.threshold:.4g} n={c.n}")
    record(4, "size", 5e4 <= n_events <= 2e5, f"{n_events} events")
    okt = record(4, "runtime", dt < 120.0, f"{dt:.1f}s")
    assert all(c.passed for c in checks) and okt and 5e4 <= n_events <= 2e5


def _zero_prob_check(crit, p, P, tau_max, seed):
    tau = np.geomspace(1e-3 * p.c, tau_max, 12)
    # about two mean gaps between window starts
    T = 2.0 * N_WINDOWS / (P_REPLICAS * an.stationary_rate(p))
    emp = sim.zero_event_probability(p, tau, N_WINDOWS, seed=seed, T=T, replicas=P_REPLICAS)
    ana = Curve(tau, P(tau))
    rep = stats.compare_curves(emp, ana, se_floor=stats.null_se_probability(ana.values, emp.meta["n_windows"]))
    return record(crit, "P-hat", rep.ok,
                  f"{emp.meta['n_windows']} windows, max|z|={rep.max_abs_z:.2f}")


def _histogram_check(crit, p, F, tau_max, seed):
    lam = an.stationary_rate(p)
    T = N_GAPS / lam / GAP_REPLICAS
    gaps = sim.interevent_samples(p, T, GAP_REPLICAS, seed=seed)
    edges = np.geomspace(1e-3 * p.c, tau_max, N_BINS + 1)
    hist = stats.histogram_density(gaps, edges)
    avg = stats.bin_average(F, edges)
    rep = stats.compare_curves(hist, Curve(hist.grid, avg),
                               se_floor=stats.null_se_density(avg, edges, gaps.size))
    ok = record(crit, "histogram", rep.ok,
                f"{gaps.size} gaps, {rep.n_beyond_3se}/{N_BINS} bins beyond 3 SE, max|z|={rep.max_abs_z:.1f}")
    return ok, rep


def test_criterion_5_p_zero():
    t0 = time.perf_counter()
    p = mc_params(m=1.0)
    ok = _zero_prob_check(5, p, lambda t: an.p_zero_m0(t, p), 0.2 * p.c, seed=5)
    record(5, "runtime (P-hat)", time.perf_counter() - t0 < 300, f"{time.perf_counter() - t0:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="closed-form m = m0 density omits the triggered-pair term")
def test_criterion_5_histogram():
    t0 = time.perf_counter()
    p = mc_params(m=1.0)
    ok, _ = _histogram_check(5, p, lambda t: an.interevent_density_m0(t, p), 0.2 * p.c, seed=105)
    record(5, "runtime (histogram)", time.perf_counter() - t0 < 300, f"{time.perf_counter() - t0:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def general_case():
    p = mc_params(m=1.8)
    return p, derived_constants(p, cal.fit_L(p, check=False).L_fit)


def test_criterion_6_p_zero(general_case):
    p, k = general_case
    t0 = time.perf_counter()
    ok = _zero_prob_check(6, p, lambda t: an.p_zero_general(t, p, k), 0.1 * p.c, seed=6)
    record(6, "runtime (P-hat)", time.perf_counter() - t0 < 300, f"{time.perf_counter() - t0:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="closed-form general density over-predicts simulated gaps")
def test_criterion_6_histogram(general_case):
    p, k = general_case
    t0 = time.perf_counter()
    ok, _ = _histogram_check(6, p, lambda t: an.interevent_density_general(t, p, k), 0.1 * p.c, seed=106)
    record(6, "runtime (histogram)", time.perf_counter() - t0 < 300, f"{time.perf_counter() - t0:.1f}s")
    assert ok


def test_criterion_7_laplace():
    t0 = time.perf_counter()
    p = reference_params()
    k = derived_constants(p, cal.fit_L(p, check=False).L_fit)
    s = np.array([complex(r, i) for r in (0.1, 1.0, 10.0) for i in (0.0, 1.0, -1.0, 10.0, -10.0)]) / p.c
    vals = lp.laplace_phi(s, p)
    ref = np.array([lp.laplace_phi_quad(x, p) for x in s])
    phi_err = float(np.max(np.abs(vals / ref - 1.0)))
    t = np.linspace(0.0, 10.0 * p.c, 1001)
    vol = lp.volterra_nbar_minus(np.linspace(0.0, 10.0 * p.c, 10001), p, k)
    brm = lp.invert_nbar_minus(t, p, k)
    sup = float(np.max(np.abs(brm.values - vol.values[::10])))
    n0 = float(brm.values[0])
    ident = max(lp.check_integral_identity(x * p.c, p, k, vol) for x in (0.1, 0.5, 2.0, 10.0))
    dt = time.perf_counter() - t0
    oks = [
        record(7, "laplace_phi", phi_err < 1e-6, f"max rel err {phi_err:.1e}"),
        record(7, "bromwich vs volterra", sup < 1e-3, f"sup {sup:.1e}"),
        record(7, "Nbar(0+)", abs(n0 - k.Q) < 1e-3, f"{n0:.6f} vs Q={k.Q:.6f}"),
        record(7, "identity", ident < 1e-4, f"residual {ident:.1e}"),
        record(7, "runtime", dt < 60.0, f"{dt:.1f}s"),
    ]
    assert all(oks)


def test_criterion_8_palm():
    t0 = time.perf_counter()
    tau = np.geomspace(1e-3, 0.2, 12)
    p0 = reference_params(m=1.0)
    lam0 = an.stationary_rate(p0)
    h = 1e-4 * p0.c
    e_m0 = np.max(np.abs(fd2(lambda t: an.p_zero_m0(t, p0), tau, h) / lam0
                         / an.interevent_density_m0(tau, p0) - 1.0))
    p = reference_params()
    k = derived_constants(p, cal.fit_L(p, check=False).L_fit)
    lam = an.stationary_rate(p)
    e_gen = np.max(np.abs(fd2(lambda t: an.p_zero_general(t, p, k), tau, h) / lam
                          / an.interevent_density_general(tau, p, k) - 1.0))
    dt = time.perf_counter() - t0
    oks = [
        record(8, "m0 evaluator", e_m0 < 1e-5, f"rel err {e_m0:.1e}"),
        record(8, "general evaluator", e_gen < 1e-5, f"rel err {e_gen:.1e}"),
        record(8, "runtime", dt < 1.0, f"{dt:.3f}s"),
    ]
    assert all(oks)


def test_criterion_9_poisson_limit():
    p = mc_params(m=1.8, kappa=0.0)
    lam = p.omega * np.exp(-p.beta * (p.m - p.m0))
    gaps = sim.interevent_samples(p, 1e6, 4, seed=9, burn_in=0.0)
    ks = stats.ks_statistic(np.sort(gaps), lambda x: -np.expm1(-lam * x))
    ok_ks = record(9, "kappa=0 gaps exponential", ks.passes(0.01),
                   f"D={ks.statistic:.4f} crit={ks.crit_1:.4f} n={ks.n}")
    tau = np.geomspace(1e-3, 0.2, 9)
    k = derived_constants(p, cal.fit_L(p, check=False).L_fit)
    expo = lam * np.exp(-lam * tau)
    dev = max(np.max(np.abs(an.interevent_density_general(tau, p, k) / expo - 1)),
              np.max(np.abs(an.interevent_density_m0(tau, p.replace(m=p.m0)) / (p.omega * np.exp(-p.omega * tau)) - 1)),
              np.max(np.abs(an.p_zero_bromwich(tau, p, k) / np.exp(-lam * tau) - 1)))
    ok_an = record(9, "kappa=0 analytics exponential", dev < 1e-12, f"max rel dev {dev:.1e}")
    pz = sim.zero_event_probability(p, np.array([1.0, 10.0, 50.0]), 20000, seed=19, burn_in=0.0)
    zmax = float(np.max(np.abs(pz.values - np.exp(-lam * pz.grid)) / pz.se))
    ok_pz = record(9, "kappa=0 P-hat", zmax < 3, f"max|z|={zmax:.2f}")
    assert ok_ks and ok_an and ok_pz


def test_criterion_9_uncorrelated():
    p = reference_params(c1=0.0)
    mc = np.linspace(1.0, 8.0, 50)
    same = all(np.array_equal(laws.cond_pdf(mc, mp, p), laws.gr_pdf(mc, p)) for mp in (1.0, 2.5, 6.0))
    assert record(9, "C1=0 cond_pdf is GR", same, "bitwise equal")


@pytest.mark.xfail(strict=True, reason="general density at m = m0 doubles the Omori term at tau -> 0")
def test_criterion_9_m0_limit():
    p = reference_params(m=1.0)
    k = derived_constants(p, cal.fit_L(p, check=False).L_fit)
    tau = np.geomspace(1e-4, 0.01, 20)
    gen = an.interevent_density_general(tau, p, k)
    ex = an.interevent_density_m0(tau, p)
    rel = float(np.max(np.abs(gen / ex - 1.0)))
    prel = float(np.max(np.abs(an.p_zero_general(tau, p, k) / an.p_zero_m0(tau, p) - 1.0)))
    assert prel < 1e-2  # the zero-event probabilities do agree
    ok = record(9, "m=m0 general vs exact density", rel < 1e-2,
                f"max rel diff {rel:.2f} (P agrees to {prel:.0e})")
    assert ok
