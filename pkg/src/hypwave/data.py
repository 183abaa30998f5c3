"""Initial-data families: symmetric Gaussian shells, the extremal family, spectral bumps."""

from __future__ import annotations

import numpy as np

from .evolve import StatePair
from .functionals import extremal_family
from .transform import RadialField, RadialGrid, TransformPlan

RANDOM_COMPONENTS = 5


def gaussian_shell(grid: RadialGrid, amplitude: float, r0: float, width: float) -> RadialField:
    """``A/2 [exp(-(r-r0)^2/w^2) + exp(-(r+r0)^2/w^2)]``.

    The mirrored term makes the profile even in r, hence smooth at the
    origin of H^n; for ``r0 = 0`` it reduces to ``A exp(-r^2/w^2)``.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    r = grid.nodes
    values = 0.5 * amplitude * (np.exp(-((r - r0) / width) ** 2) + np.exp(-((r + r0) / width) ** 2))
    return RadialField(grid, values)


def spectral_bump(plan: TransformPlan, lam0: float, width: float, amplitude: float = 1.0) -> np.ndarray:
    """Spectral coefficients ``A exp(-(lam - lam0)^2 / w^2)``."""
    lam = plan.spectral.nodes
    return amplitude * np.exp(-((lam - lam0) / width) ** 2)


def random_field(grid: RadialGrid, rng: np.random.Generator, scale: float = 1.0) -> RadialField:
    """Superposition of five Gaussian shells with random amplitude, centre, and width."""
    values = np.zeros(grid.size)
    for _ in range(RANDOM_COMPONENTS):
        amp = rng.uniform(-1.0, 1.0)
        r0 = rng.uniform(0.0, 6.0)
        width = rng.uniform(0.5, 2.0)
        values += gaussian_shell(grid, amp, r0, width).values
    return RadialField(grid, scale * values)


def random_state(plan: TransformPlan, rng: np.random.Generator, scale: float = 1.0) -> StatePair:
    u = random_field(plan.radial, rng, scale)
    ut = random_field(plan.radial, rng, scale)
    return StatePair.from_fields(plan, u, ut)


def extremal_state(plan: TransformPlan, R: float) -> StatePair:
    return StatePair.from_fields(plan, extremal_family(R, plan.radial))
