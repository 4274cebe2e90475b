"""Brownian meanders in cones: spectral data, entrance law, samplers and checks."""

__version__ = "0.1.0"

from .cones import Circular3D, HalfSpace, PathSample, Wedge, parse_cone  # noqa: E402
from .errors import (  # noqa: E402
    ConeMeanderError,
    ConfigError,
    ConvergenceError,
    DomainError,
    NumericError,
    RejectionExhausted,
    SamplingError,
)
from .kernel import entrance_density, entrance_law, heat_kernel_wedge  # noqa: E402
from .rng import RngStreamSpec  # noqa: E402
from .spectrum import spectral_basis  # noqa: E402

__all__ = [
    "__version__",
    "Wedge",
    "Circular3D",
    "HalfSpace",
    "PathSample",
    "parse_cone",
    "RngStreamSpec",
    "spectral_basis",
    "entrance_law",
    "entrance_density",
    "heat_kernel_wedge",
    "ConeMeanderError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "NumericError",
    "RejectionExhausted",
    "SamplingError",
]
