"""Correlated-magnitude ETAS: simulation, inter-event analytics and validation."""

from .params import DerivedConstants, ModelParams, ParameterError, derived_constants, load_params

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "ModelParams",
    "ParameterError",
    "derived_constants",
    "load_params",
    "__version__",
]
