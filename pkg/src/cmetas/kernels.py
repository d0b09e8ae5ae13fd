"""Backend selection for the hot numerical kernels.

The compiled extension is used when importable; setting the environment
variable ``CMETAS_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("CMETAS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

gamma_cf_scaled = _impl.gamma_cf_scaled
volterra_trapezoid = _impl.volterra_trapezoid

__all__ = ["BACKEND", "gamma_cf_scaled", "volterra_trapezoid"]
