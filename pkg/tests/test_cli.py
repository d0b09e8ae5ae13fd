import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cmetas.cli import main
from cmetas.curves import Curve
from cmetas.simulator import Catalog

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(*argv, environ=None):
    return main([str(a) for a in argv], environ=environ or {})


def test_simulate_poisson(tmp_path):
    out = tmp_path / "cat.csv"
    assert run("simulate", "--config", CONFIGS / "poisson.yaml", "--T", 500, "--seed", 1, "--out", out) == 0
    cat = Catalog.read_csv(out)
    assert np.all(cat.generation == 0)


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run("simulate", "--config", CONFIGS / "mc_m0.yaml", "--T", 300, "--burn-in", 50, "--seed", 4,
            "--out", path)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert "# tool: cmetas" in text and "# seed: 4" in text


def test_calibrate_reference(tmp_path, capsys):
    out = tmp_path / "cal.txt"
    assert run("calibrate", "--preset", "reference", "--out", out) == 0
    from cmetas.calibration import CalibrationReport

    rep = CalibrationReport.from_text(out.read_text())
    assert rep.L_fit == pytest.approx(0.8032, abs=0.01)


def test_calibrate_limits(tmp_path):
    from cmetas.calibration import CalibrationReport

    out = tmp_path / "cal.txt"
    run("calibrate", "--preset", "reference", "--param", "m=1.0", "--out", out)
    assert CalibrationReport.from_text(out.read_text()).L_fit == pytest.approx(1.0)
    run("calibrate", "--preset", "reference", "--param", "c1=0", "--out", out)
    rep = CalibrationReport.from_text(out.read_text())
    assert rep.L_fit == pytest.approx(rep.H)


def test_density_poisson(tmp_path):
    out = tmp_path / "d.csv"
    assert run("density", "--config", CONFIGS / "mc_m0.yaml", "--param", "kappa=0", "--out", out) == 0
    c = Curve.read_csv(out)
    np.testing.assert_allclose(c.values, 0.05 * np.exp(-0.05 * c.grid), rtol=1e-13)


def test_density_cross_evaluator(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["--config", CONFIGS / "mc_m0.yaml", "--tau-max", 0.01]
    assert run("density", *common, "--evaluator", "m0", "--out", a) == 0
    assert run("density", *common, "--evaluator", "bromwich", "--L", 1.0, "--out", b) == 0
    ca, cb = Curve.read_csv(a), Curve.read_csv(b)
    np.testing.assert_allclose(ca.values, cb.values, rtol=1e-2)
    assert ca.meta["evaluator"] == "m0"


def test_density_rejections(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert run("density", "--preset", "reference", "--evaluator", "m0", "--out", out) == 2
    assert run("density", "--preset", "reference", "--evaluator", "general", "--out", out) == 2
    assert "needs the constant L" in capsys.readouterr().err
    assert run("density", "--preset", "reference", "--fit-L", "--out", out) == 0


def test_precedence(tmp_path):
    out = tmp_path / "d.csv"
    env = {"CMETAS_OMEGA": "0.2", "CMETAS_UNRELATED": "x"}
    run("density", "--config", CONFIGS / "poisson.yaml", "--param", "m=1.0", "--out", out, environ=env)
    assert Curve.read_csv(out).meta["omega"] == "0.2"
    run("density", "--config", CONFIGS / "poisson.yaml", "--param", "m=1.0", "--param", "omega=0.3",
        "--out", out, environ=env)
    assert Curve.read_csv(out).meta["omega"] == "0.3"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text((CONFIGS / "poisson.yaml").read_text() + "bogus: 1\n")
    assert run("density", "--config", cfg, "--out", tmp_path / "d.csv") == 2


def test_bad_param_flag(tmp_path):
    assert run("density", "--preset", "reference", "--param", "nope", "--out", tmp_path / "d.csv") == 2


def test_validate_poisson(tmp_path):
    out = tmp_path / "v"
    rc = run("validate", "--config", CONFIGS / "poisson.yaml", "--T", 2e5, "--replicas", 2,
             "--windows", 5000, "--fit-L", "--tau-min", 1, "--tau-max", 40, "--tau-points", 9, "--seed", 3,
             "--out", out)
    assert rc == 0
    assert "passed: True" in (out / "report.txt").read_text()
    for name in ("p_zero_mc.csv", "p_zero_analytic.csv", "density_mc.csv", "density_analytic.csv"):
        Curve.read_csv(out / name)


def test_laplace_check_degenerate_m0(tmp_path):
    # m = m0 with L = 1 gives delta = 0: identity check is skipped, Nbar_- = 1
    out = tmp_path / "l.txt"
    assert run("laplace-check", "--config", CONFIGS / "mc_m0.yaml", "--L", 1.0, "--out", out) == 0
    assert "passed: True" in out.read_text()


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "cmetas.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("cmetas ")
