"""Covering-number bounds for RKHS unit balls of isotropic kernels on spheres."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    PositivityError,
    ResourceError,
)
from .harmonics import cumulative_dim, dim_ratio, harmonic_dim, legendre
from .kernels import Explicit, Geometric, PolynomialDecay, SchoenbergModel

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DivergenceError",
    "DomainError",
    "PositivityError",
    "ResourceError",
    "Explicit",
    "Geometric",
    "PolynomialDecay",
    "SchoenbergModel",
    "cumulative_dim",
    "dim_ratio",
    "harmonic_dim",
    "legendre",
]

__version__ = "0.1.0"
