"""Radial spectral simulator for the energy-critical shifted wave equation on H^n."""

from __future__ import annotations

from .specfun import Dimension, plancherel_density, spherical_fn, spherical_fn_alt, volume_weight
from .transform import TransformPlan, forward, inverse, make_plan
from .evolve import EvolveConfig, StatePair, evolve, linear_propagate, scattering_detect

__version__ = "0.1.0"

__all__ = [
    "Dimension", "EvolveConfig", "StatePair", "TransformPlan", "evolve", "forward", "inverse",
    "linear_propagate", "make_plan", "plancherel_density", "scattering_detect", "spherical_fn",
    "spherical_fn_alt", "volume_weight",
]
