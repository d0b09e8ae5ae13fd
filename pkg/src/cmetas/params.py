"""Model parameters, derived constants and config loading."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

LN10 = math.log(10.0)

PARAM_KEYS = ("beta", "a", "kappa", "c", "theta", "c1", "m0", "m", "omega")
ENV_PREFIX = "CMETAS_"


class ParameterError(ValueError):
    """Raised when a parameter set violates the model constraints."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter vector of the correlated-magnitude ETAS model.

    Attributes
    ----------
    beta : float
        Gutenberg-Richter exponent (``b * ln 10``).
    a : float
        Productivity exponent (``alpha * ln 10``).
    kappa : float
        Mean offspring count of an event of magnitude ``m0``.
    c, theta : float
        Omori-Utsu time constant and exponent.
    c1 : float
        Magnitude correlation strength, ``0 <= c1 < 1``.
    m0 : float
        Reference magnitude (smallest magnitude able to trigger).
    m : float
        Completeness magnitude (observability threshold), ``m >= m0``.
    omega : float
        Rate of spontaneous events with magnitude ``>= m0``.
    """

    beta: float
    a: float
    kappa: float
    c: float
    theta: float
    c1: float
    m0: float
    m: float
    omega: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or math.isnan(v):
                raise ParameterError(f"{f.name} must be a real number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if not (self.beta > self.a > 0):
            raise ParameterError("need beta > a > 0")
        if not (self.theta > 0 and self.c > 0 and self.omega > 0):
            raise ParameterError("theta, c and omega must be positive")
        # kappa = 0 is allowed: it is the Poisson limit used by the degenerate checks
        if self.kappa < 0:
            raise ParameterError("kappa must be nonnegative")
        if not (0.0 <= self.c1 < 1.0):
            raise ParameterError("need 0 <= c1 < 1")
        if not (self.m >= self.m0):
            raise ParameterError("completeness magnitude m must be >= m0")
        if self.branching_ratio >= 1.0:
            raise ParameterError(
                f"supercritical parameters: branching ratio n = {self.branching_ratio:.6g} >= 1"
            )

    @classmethod
    def from_b_alpha(cls, b: float, alpha: float, **kwargs) -> "ModelParams":
        """Build parameters from the decimal b-value and productivity alpha."""
        return cls(beta=b * LN10, a=alpha * LN10, **kwargs)

    @property
    def branching_ratio(self) -> float:
        return self.beta * self.kappa / (self.beta - self.a)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class DerivedConstants:
    """Scalar constants of the zero-event probability for ``m >= m0``.

    ``n`` branching ratio, ``H = exp(-(beta-a)(m-m0))``, ``Q = exp(-beta(m-m0))``,
    ``L`` the fitted constant of ``I_B ~ n L p``, ``delta = n(1-L)``,
    ``delta_cap = n/(1-n) - delta/(1-delta)``,
    ``omega_tilde = omega (Q - n (H - L))`` and ``mbar`` the root of ``q``.
    """

    n: float
    H: float
    Q: float
    L: float
    delta: float
    delta_cap: float
    omega_tilde: float
    mbar: float


def derived_constants(p: ModelParams, L: float) -> DerivedConstants:
    if not (0.0 < L <= 1.0):
        raise ParameterError(f"L must lie in (0, 1], got {L}")
    n = p.branching_ratio
    if n >= 1.0:
        raise ParameterError("branching ratio must be < 1")
    dm = p.m - p.m0
    H = math.exp(-(p.beta - p.a) * dm)
    Q = math.exp(-p.beta * dm)
    delta = n * (1.0 - L)
    return DerivedConstants(
        n=n,
        H=H,
        Q=Q,
        L=L,
        delta=delta,
        delta_cap=n / (1.0 - n) - delta / (1.0 - delta),
        omega_tilde=p.omega * (Q - n * (H - L)),
        mbar=math.log(2.0) / (p.beta - p.a) + p.m0,
    )


def _coerce(key: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"config key {key!r}: cannot parse {value!r} as a number") from None


def read_config(path: str | os.PathLike | None) -> dict:
    """Read a flat key-value config (YAML or JSON). Unknown keys are kept."""
    if path is None:
        return {}
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: expected a flat key-value mapping")
    for k, v in data.items():
        if isinstance(v, (dict, list)):
            raise ParameterError(f"{path}: key {k!r} is not a scalar")
    return data


def env_overrides(environ=None) -> dict:
    """Collect ``CMETAS_<KEY>`` environment overrides (keys lower-cased)."""
    environ = os.environ if environ is None else environ
    out = {}
    for k, v in environ.items():
        if k.startswith(ENV_PREFIX):
            out[k[len(ENV_PREFIX):].lower()] = v
    return out


def params_from_mapping(data: dict) -> ModelParams:
    """Build ``ModelParams`` from a mapping, accepting ``b``/``alpha`` aliases."""
    d = dict(data)
    if "beta" not in d and "b" in d:
        d["beta"] = _coerce("b", d["b"]) * LN10
    if "a" not in d and "alpha" in d:
        d["a"] = _coerce("alpha", d["alpha"]) * LN10
    missing = [k for k in PARAM_KEYS if k not in d]
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    return ModelParams(**{k: _coerce(k, d[k]) for k in PARAM_KEYS})


def load_params(path=None, overrides: dict | None = None, environ=None) -> ModelParams:
    """Config file, then environment, then explicit overrides (last wins)."""
    data = read_config(path)
    data.update(env_overrides(environ))
    data.update(overrides or {})
    return params_from_mapping(data)


def reference_params(**changes) -> ModelParams:
    """Magnitude parameters of the worked example (beta, a, C1, m0, m).

    The temporal parameters and kappa are not part of that example; kappa is
    set so that n = 0.5, with c = 1, theta = 0.5 and omega = 0.05.
    """
    beta, a = 2.0493, 1.832
    base = dict(
        beta=beta,
        a=a,
        kappa=0.5 * (beta - a) / beta,
        c=1.0,
        theta=0.5,
        c1=0.8,
        m0=1.0,
        m=1.8,
        omega=0.05,
    )
    base.update(changes)
    return ModelParams(**base)
