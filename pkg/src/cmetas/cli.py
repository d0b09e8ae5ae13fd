"""Command-line entry point: ``cmetas <command> [options]``.

Settings come from a flat YAML/JSON config, then ``CMETAS_<KEY>`` environment
variables, then command-line flags (last wins). Every output file starts with
a ``#`` header echoing the parameters, the seed and the tool version, and
contains no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, analytics, calibration, laplace, simulator, stats
from .curves import Curve
from .params import PARAM_KEYS, ENV_PREFIX, ParameterError, derived_constants, params_from_mapping, reference_params, read_config

OPTION_KEYS = {
    "seed": int,
    "T": float,
    "replicas": int,
    "windows": int,
    "burn_in": float,
    "tau_min": float,
    "tau_max": float,
    "tau_points": int,
    "evaluator": str,
    "L": float,
}
ALIASES = {"b", "alpha"}
DEFAULTS = dict(seed=0, T=1e4, replicas=4, windows=20000, burn_in=None,
                tau_min=1e-3, tau_max=0.2, tau_points=41, evaluator=None, L=None)


class UsageError(Exception):
    pass


def _env_settings(environ) -> dict:
    out = {}
    known = {k.lower(): k for k in list(PARAM_KEYS) + list(OPTION_KEYS) + list(ALIASES)}
    for k, v in environ.items():
        if k.startswith(ENV_PREFIX):
            key = k[len(ENV_PREFIX):].lower()
            if key in known:
                out[known[key]] = v
    return out


def resolve(args, environ=None) -> tuple:
    """Merge config, environment and flags into ``(ModelParams, options)``."""
    environ = os.environ if environ is None else environ
    data = {}
    if getattr(args, "preset", None) == "reference":
        data.update(reference_params().as_dict())
    cfg = read_config(args.config) if args.config else {}
    unknown = set(cfg) - set(PARAM_KEYS) - set(OPTION_KEYS) - ALIASES
    if unknown:
        raise ParameterError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    data.update(cfg)
    data.update(_env_settings(environ))
    for item in args.param or []:
        key, sep, val = item.partition("=")
        if not sep or key not in set(PARAM_KEYS) | ALIASES:
            raise ParameterError(f"--param expects KEY=VALUE with KEY in {', '.join(PARAM_KEYS)}")
        data[key] = val
    for key in OPTION_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "fit_L", False):
        data["L"] = None
    params = params_from_mapping({k: v for k, v in data.items() if k not in OPTION_KEYS})
    opts = dict(DEFAULTS)
    for key, conv in OPTION_KEYS.items():
        if key in data and data[key] is not None:
            try:
                opts[key] = conv(data[key])
            except ValueError:
                raise ParameterError(f"option {key}: cannot parse {data[key]!r}") from None
    opts["fit_L"] = bool(getattr(args, "fit_L", False))
    return params, opts


def _header(command: str, p, opts: dict, extra: dict | None = None) -> dict:
    h = {"tool": f"cmetas {__version__}", "command": command}
    h.update({k: repr(v) for k, v in p.as_dict().items()})
    h["params_fingerprint"] = p.fingerprint()
    for k in sorted(opts):
        if opts[k] is not None:
            h[k] = repr(opts[k])
    h.update(extra or {})
    return h


def _out_path(args, default: str) -> Path:
    path = Path(args.out or default)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _tau_grid(opts):
    lo, hi, n = opts["tau_min"], opts["tau_max"], opts["tau_points"]
    if not (0 < lo < hi) or n < 2:
        raise UsageError("need 0 < tau-min < tau-max and tau-points >= 2")
    return np.geomspace(lo, hi, n)


def _constants(p, opts, require=True):
    """Derived constants with ``L`` from the flags, or fitted with ``--fit-L``."""
    if opts["fit_L"]:
        L = calibration.fit_L(p, check=False).L_fit
    elif opts["L"] is not None:
        L = opts["L"]
    elif not require:
        return None
    else:
        raise UsageError("this evaluator needs the constant L: pass --L VALUE or --fit-L")
    return derived_constants(p, L)


def _evaluator(p, opts):
    ev = opts["evaluator"] or ("m0" if p.m == p.m0 else "general")
    if ev not in ("m0", "general", "bromwich"):
        raise UsageError(f"unknown evaluator {ev!r}")
    if ev == "m0" and p.m != p.m0:
        raise UsageError("the m0 evaluator requires m == m0; use general or bromwich")
    return ev


def _density_fn(ev, p, k):
    if ev == "m0":
        return lambda t: analytics.interevent_density_m0(t, p)
    if ev == "general":
        return lambda t: analytics.interevent_density_general(t, p, k)
    return lambda t: analytics.interevent_density_bromwich(t, p, k)


def _p_zero_fn(ev, p, k):
    if ev == "m0":
        return lambda t: analytics.p_zero_m0(t, p)
    if ev == "general":
        return lambda t: analytics.p_zero_general(t, p, k)
    return lambda t: analytics.p_zero_bromwich(t, p, k)


# -- commands ------------------------------------------------------------------------------

def cmd_simulate(args, p, opts) -> int:
    cat = simulator.simulate_catalog(p, opts["T"], burn_in=opts["burn_in"], seed=opts["seed"])
    path = _out_path(args, "catalog.csv")
    cat.to_csv(path, header=_header("simulate", p, opts))
    win = cat.in_window()
    gens = np.bincount(cat.generation[win]) if win.any() else np.zeros(1, int)
    obs = int(np.sum(win & (cat.magnitude >= p.m)))
    frac = obs / max(int(win.sum()), 1)
    Q = float(np.exp(-p.beta * (p.m - p.m0)))
    print(f"events in window: {int(win.sum())} (total incl. burn-in {len(cat)})")
    for g, cnt in enumerate(gens):
        print(f"  generation {g}: {int(cnt)}")
    print(f"observable fraction: {frac:.5f} (GR prediction Q = {Q:.5f})")
    print(f"wrote {path}")
    return 0


def cmd_calibrate(args, p, opts) -> int:
    rep = calibration.fit_L(p)
    path = _out_path(args, "calibration.txt")
    text = "".join(f"# {k}: {v}\n" for k, v in _header("calibrate", p, opts).items()) + rep.to_text()
    path.write_text(text)
    sys.stdout.write(rep.to_text())
    ok = 0.0 < rep.L_fit <= 1.0 and rep.max_rel_err_IA < 1e-8
    return 0 if ok else 1


def cmd_density(args, p, opts) -> int:
    ev = _evaluator(p, opts)
    k = _constants(p, opts) if ev != "m0" else None
    tau = _tau_grid(opts)
    vals = np.asarray(_density_fn(ev, p, k)(tau), dtype=float)
    extra = {"evaluator": ev}
    if k is not None:
        extra["L_used"] = repr(k.L)
    curve = Curve(tau, vals, x_name="tau", y_name="density")
    path = _out_path(args, "density.csv")
    curve.to_csv(path, header=_header("density", p, opts, extra))
    print(f"wrote {path} ({len(tau)} points, evaluator {ev})")
    return 0


def cmd_validate(args, p, opts) -> int:
    ev = _evaluator(p, opts)
    k = _constants(p, opts) if ev != "m0" else None
    tau = _tau_grid(opts)
    outdir = Path(args.out or "validate")
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(opts["seed"]).spawn(2)
    hdr = _header("validate", p, opts, {"evaluator": ev})

    pz = simulator.zero_event_probability(p, tau, opts["windows"], seed=seeds[0], T=opts["T"],
                                          replicas=opts["replicas"], burn_in=opts["burn_in"])
    pz_an = Curve(tau, np.asarray(_p_zero_fn(ev, p, k)(tau), dtype=float), x_name="tau", y_name="p_zero")
    rep_p = stats.compare_curves(pz, pz_an,
                                 se_floor=stats.null_se_probability(pz_an.values, pz.meta["n_windows"]))

    gaps = simulator.interevent_samples(p, opts["T"], opts["replicas"], seed=seeds[1],
                                        burn_in=opts["burn_in"])
    hist = stats.histogram_density(gaps, tau)
    dens = _density_fn(ev, p, k)
    an = stats.bin_average(lambda t: float(np.asarray(dens(t)).reshape(-1)[0]), tau)
    hist_an = Curve(hist.grid, an, x_name="tau", y_name="density")
    rep_h = stats.compare_curves(hist, hist_an,
                                 se_floor=stats.null_se_density(an, tau, gaps.size))

    pz.to_csv(outdir / "p_zero_mc.csv", hdr)
    pz_an.to_csv(outdir / "p_zero_analytic.csv", hdr)
    hist.to_csv(outdir / "density_mc.csv", hdr)
    hist_an.to_csv(outdir / "density_analytic.csv", hdr)

    lines = [f"# {k_}: {v}\n" for k_, v in hdr.items()]
    lines.append(f"n_gaps: {gaps.size}\n")
    lines.append(rep_p.to_text("p_zero."))
    lines.append(rep_h.to_text("density."))
    ok = rep_p.ok and rep_h.ok
    if p.kappa == 0:
        lam = analytics.stationary_rate(p)
        ks = stats.ks_statistic(np.sort(gaps), lambda x: -np.expm1(-lam * x))
        lines.append(f"poisson.ks_statistic: {ks.statistic!r}\npoisson.crit_1: {float(ks.crit_1)!r}\n")
        ok = ok and ks.passes(0.01)
    lines.append(f"passed: {ok}\n")
    text = "".join(lines)
    (outdir / "report.txt").write_text(text)
    sys.stdout.write(text)
    return 0 if ok else 1


S_GRID = [complex(re, im) for re in (0.1, 1.0, 10.0) for im in (0.0, 1.0, -1.0, 10.0, -10.0)]


def cmd_laplace_check(args, p, opts) -> int:
    k = _constants(p, opts)
    lines, ok = [], True
    worst = 0.0
    for s in S_GRID:
        a = laplace.laplace_phi(s * 1.0 / p.c, p)
        b = laplace.laplace_phi_quad(s * 1.0 / p.c, p)
        worst = max(worst, abs(a - b) / abs(b))
    lines.append(f"laplace_phi.max_rel_err: {worst!r}\n")
    ok &= worst < 1e-6

    t = np.linspace(0.0, 10.0 * p.c, 1001)
    vol = laplace.volterra_nbar_minus(np.linspace(0.0, 10.0 * p.c, 10001), p, k)
    brm = laplace.invert_nbar_minus(t, p, k)
    sup = float(np.max(np.abs(brm.values - vol.values[::10])))
    lines.append(f"bromwich_vs_volterra.sup: {sup!r}\n")
    lines.append(f"nbar_minus_at_0: {float(brm.values[0])!r}\nQ: {k.Q!r}\n")
    ok &= sup < 1e-3 and abs(brm.values[0] - k.Q) < 1e-3
    if k.delta > 0:
        res = max(laplace.check_integral_identity(x, p, k, vol) for x in (0.5 * p.c, 2 * p.c, 10 * p.c))
        lines.append(f"integral_identity.residual: {res!r}\n")
        ok &= res < 1e-4

    # degenerate pair: delta = 0 and H = L gives Nbar_- = Q exactly
    kd = k.__class__(**{**k.__dict__, "delta": 0.0, "L": k.H})
    deg = laplace.invert_nbar_minus(t[1:], p, kd)
    dev = float(np.max(np.abs(deg.values - k.Q)))
    lines.append(f"degenerate_constant.max_abs_err: {dev!r}\n")
    ok &= dev < 1e-4
    lines.append(f"passed: {bool(ok)}\n")
    hdr = "".join(f"# {k_}: {v}\n" for k_, v in _header("laplace-check", p, opts, {"L_used": repr(k.L)}).items())
    path = _out_path(args, "laplace_check.txt")
    path.write_text(hdr + "".join(lines))
    sys.stdout.write("".join(lines))
    return 0 if ok else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "density": cmd_density,
    "validate": cmd_validate,
    "laplace-check": cmd_laplace_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat YAML/JSON file with parameters and options")
    common.add_argument("--preset", choices=["reference"], help="start from a built-in parameter set")
    common.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="override a model parameter (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (or directory for validate)")

    tau = argparse.ArgumentParser(add_help=False)
    tau.add_argument("--tau-min", dest="tau_min", type=float)
    tau.add_argument("--tau-max", dest="tau_max", type=float)
    tau.add_argument("--tau-points", dest="tau_points", type=int)

    ev = argparse.ArgumentParser(add_help=False)
    ev.add_argument("--evaluator", choices=["m0", "general", "bromwich"])
    ev.add_argument("--L", type=float, help="constant L of the general evaluator")
    ev.add_argument("--fit-L", dest="fit_L", action="store_true", help="fit L by least squares")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--T", type=float, help="window length per replica")
    sim.add_argument("--burn-in", dest="burn_in", type=float)

    parser = argparse.ArgumentParser(prog="cmetas", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cmetas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common, sim], help="simulate one catalog")
    sub.add_parser("calibrate", parents=[common], help="fit L and check invariance")
    sub.add_parser("density", parents=[common, tau, ev], help="analytic inter-event density")
    v = sub.add_parser("validate", parents=[common, tau, ev, sim], help="Monte Carlo vs analytics")
    v.add_argument("--replicas", type=int)
    v.add_argument("--windows", type=int)
    sub.add_parser("laplace-check", parents=[common, ev], help="Laplace machinery checks")
    return parser


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        p, opts = resolve(args, environ)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytics.SmallTauWarning)
            return COMMANDS[args.command](args, p, opts)
    except (ParameterError, UsageError, ValueError) as exc:
        print(f"cmetas {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
