import numpy as np
import pytest

from cmetas.params import ModelParams, reference_params

BETA = 2.0493


def mc_params(m=1.0, **kw) -> ModelParams:
    """Light-tailed set (2a < beta) used wherever Monte Carlo errors matter."""
    a = 0.5
    base = dict(a=a, kappa=0.5 * (BETA - a) / BETA, m=m)
    base.update(kw)
    return reference_params(**base)


@pytest.fixture
def pp():
    return reference_params()


@pytest.fixture
def mcp():
    return mc_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ------------------------------------------------------------
# criterion -> list of (part, ok, detail); filled by tests/test_acceptance.py

ACCEPTANCE: dict[int, list] = {}


def record(criterion: int, part: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        summary = "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({detail})" for name, ok, detail in parts)
        tr.write_line(f"criterion {crit}: {verdict} - {summary}")
