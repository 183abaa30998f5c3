"""Norms, energy, Morawetz and Y-norm bookkeeping, and the radial pointwise bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .specfun import Dimension, as_dimension
from .transform import RadialField, RadialGrid, TransformPlan, forward, radial_derivative


def lq_norm(f: RadialField, q: float) -> float:
    """``(int |f|^q dmu)^(1/q)`` with the grid quadrature."""
    if q < 1:
        raise ValueError("q must be >= 1")
    a = np.abs(f.values)
    peak = a.max(initial=0.0)
    if peak == 0.0:
        return 0.0
    # scale out the peak so large exponents do not overflow
    return float(peak * np.dot((a / peak) ** q, f.grid.measure) ** (1.0 / q))


def sobolev_norm(plan: TransformPlan, f: RadialField, sigma: float = 0.0, gamma: float = 1.0) -> float:
    """``||D^gamma D~^sigma f||_{L^2}`` evaluated on the spectral side."""
    if gamma >= 1.5:
        raise ValueError("gamma must be < 3/2")
    return spectral_sobolev_norm(plan, forward(plan, f).values, sigma, gamma)


def spectral_sobolev_norm(plan: TransformPlan, coeffs: np.ndarray, sigma: float = 0.0,
                          gamma: float = 1.0) -> float:
    lam = plan.spectral.nodes
    rho = plan.dim.rho_f
    symbol = lam ** (2 * gamma) * (lam * lam + rho * rho + 1.0) ** sigma
    return math.sqrt(float(np.dot(symbol * plan.spectral_measure, coeffs * coeffs)))


def h01_gradient_norm(f: RadialField) -> float:
    """``(int |f'|^2 - rho^2 |f|^2 dmu)^(1/2)`` from panel-wise differentiation.

    Independent of any transform plan; the quadratic form is clipped at 0.
    """
    rho = f.grid.dim.rho_f
    df = radial_derivative(f).values
    form = np.dot(df * df - rho * rho * f.values * f.values, f.grid.measure)
    return math.sqrt(max(float(form), 0.0))


# ---------------------------------------------------------------------------
# energy

@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    elastic: float
    potential: float

    @property
    def total(self) -> float:
        return self.kinetic + self.elastic + self.potential


def potential_energy(u: RadialField, zeta: float) -> float:
    p = u.grid.dim.p_c_f
    if zeta == 0:
        return 0.0
    return -zeta / (p + 1.0) * lq_norm(u, p + 1.0) ** (p + 1.0)


def energy(plan: TransformPlan, state, zeta: float) -> EnergyBreakdown:
    """Kinetic and elastic parts spectrally, potential part in physical space."""
    m = plan.spectral_measure
    lam = plan.spectral.nodes
    kinetic = 0.5 * float(np.dot(m, state.ut_hat * state.ut_hat))
    elastic = 0.5 * float(np.dot(m * lam * lam, state.u_hat * state.u_hat))
    return EnergyBreakdown(kinetic, elastic, potential_energy(state.u, zeta))


# ---------------------------------------------------------------------------
# Morawetz and Y-norm

def morawetz_weight(grid: RadialGrid) -> np.ndarray:
    """``rho coth r`` times the volume quadrature weights."""
    return grid.dim.rho_f / np.tanh(grid.nodes) * grid.measure


def morawetz_rate(u: RadialField) -> float:
    """``int rho coth(r) |u|^{p_c+1} dmu``; note ``p_c + 1 = 2n/(n-2)``."""
    p = u.grid.dim.p_c_f
    return float(np.dot(morawetz_weight(u.grid), np.abs(u.values) ** (p + 1.0)))


def morawetz_mass_rate(u: RadialField) -> float:
    """Second Morawetz term ``int rho (rho-1) cosh r / sinh^3 r |u|^2 dmu``.

    The weight is a quarter of ``-Delta Delta a`` for ``a = r``. It vanishes
    identically when n = 3.
    """
    rho = u.grid.dim.rho_f
    r = u.grid.nodes
    w = rho * (rho - 1.0) * np.cosh(r) / np.sinh(r) ** 3 * u.grid.measure
    return float(np.dot(w, u.values * u.values))


@dataclass
class MorawetzAccumulator:
    budget: float
    value: float = 0.0
    mass_value: float = 0.0
    history: list = field(default_factory=list)

    def add(self, rate: float, dt: float, mass_rate: float = 0.0) -> None:
        inc = rate * dt
        if inc < 0:
            raise ValueError("Morawetz increments must be non-negative")
        self.value += inc
        self.mass_value += mass_rate * dt
        self.history.append(inc)

    def within_budget(self, rel_tol: float = 1e-3) -> bool:
        return self.value <= self.budget * (1.0 + rel_tol)


@dataclass
class YNormAccumulator:
    """Running ``int ||u(t)||_{L^{2 p_c}}^{p_c} dt``; :attr:`norm` is the discrete Y-norm."""

    p_c: float
    value: float = 0.0

    def add(self, u: RadialField, dt: float) -> "YNormAccumulator":
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.value += lq_norm(u, 2.0 * self.p_c) ** self.p_c * dt
        return self

    @property
    def norm(self) -> float:
        return self.value ** (1.0 / self.p_c)


def y_norm_accumulate(acc: YNormAccumulator, u: RadialField, dt: float) -> YNormAccumulator:
    return acc.add(u, dt)


# ---------------------------------------------------------------------------
# radial pointwise estimate

def pointwise_bound_ratio(f: RadialField, h01: float | None = None) -> float:
    """``max_r |f(r)| sinh(r)^rho r^(-1/2) / ||f||_{H^{0,1}}`` over the grid nodes.

    The norm defaults to :func:`h01_gradient_norm`; a spectral value may be
    supplied instead.
    """
    norm = h01_gradient_norm(f) if h01 is None else h01
    if not norm > 0:
        raise ValueError("H^{0,1} norm must be positive")
    r = f.grid.nodes
    rho = f.grid.dim.rho_f
    profile = np.abs(f.values) * np.exp(rho * np.log(np.sinh(r)) - 0.5 * np.log(r))
    return float(profile.max() / norm)


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, from the exp(-1/x) construction."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        y = 1.0 - x
        b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


def smooth_cutoff(x):
    """Plateau function: 1 on [1/2, 3/2], 0 outside [1/4, 7/4], smooth in between."""
    x = np.asarray(x, dtype=float)
    return _smooth_step(4.0 * (x - 0.25)) * _smooth_step(4.0 * (1.75 - x))


def extremal_family(R: float, grid: RadialGrid) -> RadialField:
    """The family saturating the radial pointwise estimate at r = R."""
    if R <= 0:
        raise ValueError("R must be positive")
    r = grid.nodes
    rho = grid.dim.rho_f
    cut = smooth_cutoff(r / R)
    if R <= 1:
        values = r ** (0.5 - rho) * cut
    else:
        values = np.exp(-rho * r) * np.sqrt(r) * cut
    return RadialField(grid, values)


def _smooth_step_derivative(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    a = np.exp(-1.0 / xs)
    b = np.exp(-1.0 / (1.0 - xs))
    d = a * b * (1.0 / xs**2 + 1.0 / (1.0 - xs) ** 2) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def _cutoff_derivative(x):
    x = np.asarray(x, dtype=float)
    s1, s2 = _smooth_step(4.0 * (x - 0.25)), _smooth_step(4.0 * (1.75 - x))
    return 4.0 * (_smooth_step_derivative(4.0 * (x - 0.25)) * s2
                  - s1 * _smooth_step_derivative(4.0 * (1.75 - x)))


def extremal_profile(R: float, r, dim) -> tuple[np.ndarray, np.ndarray]:
    """``f_R`` and its exact r-derivative at arbitrary radii."""
    r = np.asarray(r, dtype=float)
    rho = as_dimension(dim).rho_f
    cut, dcut = smooth_cutoff(r / R), _cutoff_derivative(r / R) / R
    if R <= 1:
        base = r ** (0.5 - rho)
        dbase = (0.5 - rho) * r ** (-0.5 - rho)
    else:
        base = np.exp(-rho * r) * np.sqrt(r)
        dbase = base * (0.5 / r - rho)
    return base * cut, dbase * cut + base * dcut


def extremal_h01_norm(R: float, dim, tol: float = 1e-13) -> float:
    """``||f_R||_{H^{0,1}}`` by adaptive quadrature of the exact gradient form.

    Grid-free: small R puts the whole support inside one radial panel, where
    panel-wise differentiation is not accurate.
    """
    from .quadrature import adaptive_composite
    from .specfun import volume_weight

    d = as_dimension(dim)
    rho = d.rho_f

    def integrand(r):
        f, df = extremal_profile(R, r, d)
        return (df * df - rho * rho * f * f) * volume_weight(r, d)

    edges = R * np.array([0.25, 0.5, 1.0, 1.5, 1.75])
    scale = abs(integrand(np.linspace(edges[0], edges[-1], 257))).max() * R
    value, _, ok = adaptive_composite(integrand, edges[0], edges[-1], tol=tol * scale,
                                      breakpoints=edges)
    if not ok:
        raise ArithmeticError(f"H^(0,1) quadrature for f_R did not converge (R={R})")
    return math.sqrt(max(float(value.real), 0.0))


def extremal_pointwise_ratio(R: float, dim, samples: int = 4097) -> float:
    """Pointwise-bound ratio of ``f_R`` from a dense sampling of its support."""
    d = as_dimension(dim)
    r = np.linspace(0.25 * R, 1.75 * R, samples)
    f, _ = extremal_profile(R, r, d)
    profile = np.abs(f) * np.sinh(r) ** d.rho_f / np.sqrt(r)
    return float(profile.max() / extremal_h01_norm(R, d))


def saturation_bounds(dim) -> tuple[float, float]:
    """Exact range of :func:`saturation_ratio` over all R > 0.

    For R <= 1 the ratio is ``(sinh R / R)^rho``, in [1, sinh(1)^rho]; for
    R > 1 it is ``((1 - e^{-2R}) / 2)^rho``, in [((1 - e^{-2}) / 2)^rho, 2^{-rho}].
    """
    rho = as_dimension(dim).rho_f
    return ((1.0 - math.exp(-2.0)) / 2.0) ** rho, math.sinh(1.0) ** rho


def saturation_ratio(R: float, dim) -> float:
    """``f_R(R) sinh(R)^rho R^(-1/2)`` in closed form (the cutoff equals 1 at r = R)."""
    rho = as_dimension(dim).rho_f
    base = R ** (0.5 - rho) if R <= 1 else math.exp(-rho * R) * math.sqrt(R)
    return base * math.sinh(R) ** rho / math.sqrt(R)


# ---------------------------------------------------------------------------
# exponent bookkeeping

def interpolation_exponent(dim) -> tuple[Fraction, Fraction]:
    """Both sides of ``2n/(n-2) + 1/(rho - 1/2) = 2(n+1)/(n-2)`` as exact rationals."""
    d = as_dimension(dim)
    n = d.n
    lhs = Fraction(2 * n, n - 2) + 1 / (d.rho - Fraction(1, 2))
    rhs = Fraction(2 * (n + 1), n - 2)
    return lhs, rhs
