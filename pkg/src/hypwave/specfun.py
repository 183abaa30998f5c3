"""Special functions for radial harmonic analysis on real hyperbolic space.

Conventions
-----------
* ``rho = (n - 1) / 2`` and the energy-critical power ``p_c = (n + 2) / (n - 2)``.
* The Plancherel density is ``|Gamma(i lam + rho) / Gamma(i lam)|**2``, i.e. the
  inverse squared Harish-Chandra c-function with its dimensional constant
  dropped. The missing constant is recovered by the transform calibration.
* The volume weight includes the area of the unit sphere, so that
  ``int f dmu = int_0^inf f(r) volume_weight(r) dr`` for radial ``f``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadrature import adaptive_composite, gauss_legendre

OSCILLATORY_LIMIT = 500.0
SUPPORTED_DIMENSIONS = (3, 4, 5)


class LowConfidenceWarning(UserWarning):
    """Emitted when a spherical function is requested deep in the oscillatory regime."""


@dataclass(frozen=True)
class Dimension:
    """Spatial dimension of H^n together with its exact derived constants."""

    n: int

    def __post_init__(self):
        if self.n not in SUPPORTED_DIMENSIONS:
            raise ValueError("n must be 3, 4, or 5")

    @property
    def rho(self) -> Fraction:
        return Fraction(self.n - 1, 2)

    @property
    def p_c(self) -> Fraction:
        return Fraction(self.n + 2, self.n - 2)

    @property
    def rho_f(self) -> float:
        return float(self.rho)

    @property
    def p_c_f(self) -> float:
        return float(self.p_c)


def as_dimension(dim) -> Dimension:
    return dim if isinstance(dim, Dimension) else Dimension(int(dim))


# ---------------------------------------------------------------------------
# complex log-gamma

_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
              Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
              Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
              Fraction(-236364091, 2730)]
_STIRLING = [float(b / ((2 * k) * (2 * k - 1))) for k, b in enumerate(_BERNOULLI, start=1)]
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SHIFT_TARGET = 16.0


def loggamma(z):
    """Complex log-gamma by upward recurrence followed by the Stirling series.

    The argument is shifted until its real part exceeds 16, where twelve
    Stirling correction terms give full double precision. For ``Re z > 0``
    the result is the principal branch. Poles (non-positive integers) are
    not handled.
    """
    z = np.asarray(z, dtype=complex)
    shift = np.maximum(0, np.ceil(_SHIFT_TARGET - z.real)).astype(int)
    w = z + shift
    inv = 1.0 / w
    inv2 = inv * inv
    series = np.zeros_like(w)
    power = inv
    for coeff in _STIRLING:
        series = series + coeff * power
        power = power * inv2
    out = (w - 0.5) * np.log(w) - w + _HALF_LOG_2PI + series
    for k in range(int(shift.max(initial=0))):
        active = k < shift
        out = out - np.where(active, np.log(np.where(active, z + k, 1.0)), 0.0)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# c-function and Plancherel density

def _check_positive(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise ValueError("lambda must be > 0")
    return lam


def gamma_ratio_sq(lam, rho):
    """``|Gamma(i lam + rho)|**2 / |Gamma(i lam + 1)|**2`` for lam > 0.

    Integer ``rho`` is evaluated by the finite product from the recurrence;
    other values go through :func:`loggamma`.
    """
    lam = _check_positive(lam)
    rho = Fraction(rho)
    if rho.denominator == 1 and rho >= 1:
        out = np.ones_like(lam)
        for k in range(1, int(rho)):
            out = out * (lam * lam + k * k)
    else:
        num = loggamma(1j * lam + float(rho)).real
        den = loggamma(1j * lam + 1.0).real
        out = np.exp(2.0 * (num - den))
    return out if out.ndim else float(out)


def plancherel_density(lam, dim):
    """Plancherel density ``lam**2 * gamma_ratio_sq(lam, rho)``, constant dropped."""
    dim = as_dimension(dim)
    lam = _check_positive(lam)
    return lam * lam * gamma_ratio_sq(lam, dim.rho)


def c_function(lam, dim):
    """Harish-Chandra c-function with the standard normalization ``c(-i rho) = 1``.

    ``c(lam) = 2**(n-2) Gamma(n/2) / sqrt(pi) * Gamma(i lam) / Gamma(i lam + rho)``.
    Only used to evaluate spherical functions through their large-r expansion.
    """
    dim = as_dimension(dim)
    lam = _check_positive(lam)
    const = 2.0 ** (dim.n - 2) * math.gamma(dim.n / 2) / math.sqrt(math.pi)
    rho = Fraction(dim.rho)
    if rho.denominator == 1:
        den = np.ones_like(lam, dtype=complex)
        for k in range(int(rho)):
            den = den * (1j * lam + k)
        return const / den
    return const * np.exp(loggamma(1j * lam) - loggamma(1j * lam + float(rho)))


# ---------------------------------------------------------------------------
# spherical functions

def _theta_prefactor(n: int) -> float:
    return math.gamma(n / 2) / (math.sqrt(math.pi) * math.gamma((n - 1) / 2))


def _log_base(r, theta):
    """``log(cosh r - sinh r cos theta)`` without cancellation for any r >= 0."""
    r = np.asarray(r, dtype=float)
    # cosh r - sinh r cos t = exp(-r) + 2 sinh r sin^2(t/2)
    bump = 2.0 * np.sinh(r) * np.sin(0.5 * np.asarray(theta)) ** 2
    small = np.log1p(np.expm1(-r) + bump)
    large = np.log(np.exp(-r) + bump)
    return np.where(r < 1.0, small, large)


def _theta_integrand(lam: float, r: float, dim: Dimension):
    rho = dim.rho_f

    def integrand(theta):
        log_base = _log_base(r, theta)
        return np.exp(-(1j * lam + rho) * log_base) * np.sin(theta) ** (dim.n - 2)

    return integrand


def _graded_breakpoints(r: float) -> np.ndarray:
    # the base cosh r - sinh r cos t varies on the scale t ~ 2 exp(-r) near t = 0
    smallest = 0.01 * math.exp(-r)
    levels = max(1, math.ceil(math.log2(math.pi / smallest)))
    return np.concatenate([[0.0], math.pi * 2.0 ** -np.arange(levels, -1, -1)])


def spherical_fn(lam: float, r: float, dim, *, tol: float = 1e-12) -> float:
    """Elementary spherical function by adaptive quadrature of the angular integral.

    The integrand ``(cosh r - sinh r cos t)**(-i lam - rho) sin(t)**(n-2)`` is
    integrated over [0, pi] with composite Gauss-Legendre panels, doubling
    the panel count until successive estimates agree to ``tol``. The
    imaginary part must vanish; a residue above 1e-12 is an error.

    A :class:`LowConfidenceWarning` is raised when ``lam * r > 500``.
    """
    dim = as_dimension(dim)
    if lam < 0 or r < 0:
        raise ValueError("lambda and r must be non-negative")
    if r == 0.0:
        return 1.0
    if lam * r > OSCILLATORY_LIMIT:
        warnings.warn(f"lam*r = {lam * r:.1f} exceeds {OSCILLATORY_LIMIT:g}; value is low-confidence",
                      LowConfidenceWarning, stacklevel=2)
    value, _, converged = adaptive_composite(_theta_integrand(lam, r, dim), 0.0, math.pi, tol=tol,
                                             breakpoints=_graded_breakpoints(r))
    value = _theta_prefactor(dim.n) * value
    if not converged:
        warnings.warn(f"angular quadrature did not converge at lam={lam}, r={r}",
                      LowConfidenceWarning, stacklevel=2)
    if abs(value.imag) > 1e-12:
        raise ArithmeticError(f"spherical function has imaginary residue {value.imag:.3e}")
    return float(value.real)


def spherical_fn_3d(lam, r):
    """Closed form ``sin(lam r) / (lam sinh r)`` valid in dimension 3."""
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        lr = lam * r
        sinc = np.where(lr == 0.0, 1.0, np.sin(lr) / np.where(lr == 0.0, 1.0, lr))
        ratio = np.where(r == 0.0, 1.0, r / np.where(r == 0.0, 1.0, np.sinh(r)))
    out = sinc * ratio
    return out if out.ndim else float(out)


def spherical_fn_alt(lam: float, r: float, dim, *, tol: float = 1e-12) -> float:
    """Spherical function from the Abel-type representation over u in [-r, r].

    Evaluates ``(sinh r)**(2-n) int_{-r}^{r} (cosh r - cosh u)**((n-3)/2) cos(lam u) du``
    (times the dimensional prefactor). The substitution ``u = r sin s``
    removes the square-root endpoint behaviour that appears for even n.
    Only valid for r > 0.
    """
    dim = as_dimension(dim)
    if r <= 0:
        raise ValueError("the u-representation requires r > 0")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    n = dim.n
    expo = (n - 3) / 2

    def integrand(s):
        u = r * np.sin(s)
        # cosh r - cosh u = 2 sinh((r+u)/2) sinh((r-u)/2), and r - u = 2 r sin^2(pi/4 - s/2)
        gap = 2.0 * np.sinh(0.5 * (r + u)) * np.sinh(r * np.sin(0.25 * math.pi - 0.5 * s) ** 2)
        weight = gap ** expo if expo else np.ones_like(s)
        return weight * np.cos(lam * u) * r * np.cos(s)

    scale = 2.0 ** (1.0 + expo) * _theta_prefactor(n) / math.sinh(r) ** (n - 2)
    value, _, converged = adaptive_composite(integrand, 0.0, 0.5 * math.pi, tol=0.01 * tol / scale)
    if not converged:
        warnings.warn(f"u-quadrature did not converge at lam={lam}, r={r}",
                      LowConfidenceWarning, stacklevel=2)
    return float(scale * value)


def volume_weight(r, dim):
    """``|S^{n-1}| sinh(r)**(n-1)``, the radial density of the hyperbolic volume."""
    dim = as_dimension(dim)
    area = 2.0 * math.pi ** (dim.n / 2) / math.gamma(dim.n / 2)
    out = area * np.sinh(np.asarray(r, dtype=float)) ** (dim.n - 1)
    return out if out.ndim else float(out)


def phi0_envelope(r, dim):
    """``exp(-rho r) (r + 1)``, the decay envelope bounding every spherical function."""
    dim = as_dimension(dim)
    r = np.asarray(r, dtype=float)
    return np.exp(-dim.rho_f * r) * (r + 1.0)


# ---------------------------------------------------------------------------
# dense kernel for the transform

_SERIES_RADIUS = 1.5
_SERIES_TERMS = 120


def _kernel_angular(lams: np.ndarray, rs: np.ndarray, dim: Dimension) -> np.ndarray:
    """Fixed-rule angular quadrature for small radii, all frequencies at once."""
    if rs.size == 0:
        return np.zeros((lams.size, 0))
    span = float(lams.max(initial=0.0) * rs.max(initial=0.0))
    order = int(96 + 2 * math.ceil(span))
    theta, w = gauss_legendre(0.0, math.pi, order)
    log_base = _log_base(rs[:, None], theta[None, :])                  # (r, t)
    amp = np.exp(-dim.rho_f * log_base) * (np.sin(theta) ** (dim.n - 2) * w)[None, :]
    out = np.empty((lams.size, rs.size))
    for i in range(rs.size):
        out[:, i] = np.cos(np.outer(lams, log_base[i])) @ amp[i]
    return _theta_prefactor(dim.n) * out


def _kernel_series(lams: np.ndarray, rs: np.ndarray, dim: Dimension) -> np.ndarray:
    """Large-radius evaluation ``2 Re[c(lam) Psi_lam(r)]`` with the hypergeometric series.

    ``Psi_lam(r) = (2 cosh r)**(i lam - rho) 2F1((rho - i lam)/2, (rho + 1 - i lam)/2;
    1 - i lam; sech(r)**2)``.
    """
    if rs.size == 0:
        return np.zeros((lams.size, 0))
    rho = dim.rho_f
    lam = lams[:, None]
    z = (1.0 / np.cosh(rs) ** 2)[None, :]
    a = 0.5 * (rho - 1j * lam)
    b = 0.5 * (rho + 1.0 - 1j * lam)
    c = 1.0 - 1j * lam
    term = np.ones((lams.size, rs.size), dtype=complex)
    total = term.copy()
    for k in range(_SERIES_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1))) * z
        total += term
        if np.max(np.abs(term)) < 1e-18 * np.min(np.abs(total)):
            break
    lead = np.exp((1j * lam - rho) * np.log(2.0 * np.cosh(rs))[None, :])
    cf = c_function(lams, dim)[:, None]
    return 2.0 * np.real(cf * lead * total)


def spherical_kernel(lams, rs, dim) -> np.ndarray:
    """Matrix ``K[j, i] = Phi_{lams[j]}(rs[i])`` for positive frequencies.

    Dimension 3 uses the closed form. Otherwise radii below 1.5 use a
    fixed angular Gauss-Legendre rule sized to the oscillation count, and
    larger radii use the convergent Harish-Chandra expansion, which has no
    trouble with large ``lam * r``.
    """
    dim = as_dimension(dim)
    lams = np.asarray(lams, dtype=float)
    rs = np.asarray(rs, dtype=float)
    if dim.n == 3:
        return spherical_fn_3d(lams[:, None], rs[None, :])
    _check_positive(lams)
    near = rs < _SERIES_RADIUS
    out = np.empty((lams.size, rs.size))
    out[:, near] = _kernel_angular(lams, rs[near], dim)
    out[:, ~near] = _kernel_series(lams, rs[~near], dim)
    return out
