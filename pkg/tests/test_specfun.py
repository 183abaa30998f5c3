from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from scipy.special import loggamma as sp_loggamma

from hypwave.specfun import (Dimension, LowConfidenceWarning, c_function, gamma_ratio_sq, loggamma,
                             phi0_envelope, plancherel_density, spherical_fn, spherical_fn_3d,
                             spherical_fn_alt, spherical_kernel, volume_weight)


# ---------------------------------------------------------------------------
# Dimension

@pytest.mark.parametrize("n, rho, pc", [(3, Fraction(1), Fraction(5)), (4, Fraction(3, 2), Fraction(3)),
                                        (5, Fraction(2), Fraction(7, 3))])
def test_dimension_constants_exact(n, rho, pc):
    d = Dimension(n)
    assert d.rho == rho and d.p_c == pc
    assert d.p_c == 1 + Fraction(4, n - 2)


@pytest.mark.parametrize("n", [2, 6, 7])
def test_dimension_rejects_out_of_range(n):
    with pytest.raises(ValueError, match="n must be 3, 4, or 5"):
        Dimension(n)


# ---------------------------------------------------------------------------
# log-gamma against scipy

@settings(max_examples=200, deadline=None)
@given(hst.floats(0.05, 60.0), hst.floats(-80.0, 80.0))
def test_loggamma_matches_scipy(x, y):
    z = complex(x, y)
    ours, ref = loggamma(z), complex(sp_loggamma(z))
    assert abs(ours.real - ref.real) <= 1e-12 * max(1.0, abs(ref))
    # principal branch agrees up to 2 pi i multiples only if implemented differently
    assert abs(math.remainder(ours.imag - ref.imag, 2 * math.pi)) <= 1e-12 * max(1.0, abs(ref))


def test_loggamma_vectorized_real_axis():
    x = np.linspace(0.1, 30, 50)
    np.testing.assert_allclose(loggamma(x).real, [math.lgamma(v) for v in x], rtol=1e-13, atol=1e-13)


# ---------------------------------------------------------------------------
# gamma ratio and density

LAMS = np.geomspace(1e-3, 1e3, 301)


def _oracle_ratio(lam, rho):
    return np.exp(2 * (sp_loggamma(1j * lam + rho).real - sp_loggamma(1j * lam + 1).real))


def test_gamma_ratio_n3_is_one():
    assert np.all(gamma_ratio_sq(LAMS, 1) == 1.0)


def test_gamma_ratio_n5_closed_form():
    np.testing.assert_allclose(gamma_ratio_sq(LAMS, 2), LAMS**2 + 1, rtol=1e-15)
    np.testing.assert_allclose(gamma_ratio_sq(LAMS, 2), _oracle_ratio(LAMS, 2.0), rtol=1e-10)


def test_gamma_ratio_n4_reflection_form():
    closed = (LAMS**2 + 0.25) * np.tanh(np.pi * LAMS) / LAMS
    np.testing.assert_allclose(gamma_ratio_sq(LAMS, Fraction(3, 2)), closed, rtol=1e-10)
    np.testing.assert_allclose(gamma_ratio_sq(LAMS, Fraction(3, 2)), _oracle_ratio(LAMS, 1.5),
                               rtol=1e-10)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_gamma_ratio_domain(bad):
    with pytest.raises(ValueError):
        gamma_ratio_sq(bad, 2)
    with pytest.raises(ValueError):
        plancherel_density(bad, 3)


@pytest.mark.parametrize("lam", [0.01, 0.7, 3.0, 40.0])
def test_density_n3_scales_quadratically(lam):
    assert plancherel_density(2 * lam, 3) / plancherel_density(lam, 3) == pytest.approx(4.0, rel=1e-15)


@pytest.mark.parametrize("n, closed", [
    (3, lambda l: l**2),
    (4, lambda l: l * (l**2 + 0.25) * np.tanh(np.pi * l)),
    (5, lambda l: l**2 * (l**2 + 1)),
])
def test_density_closed_forms(n, closed):
    np.testing.assert_allclose(plancherel_density(LAMS, n), closed(LAMS), rtol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_density_bound_fitted_constant(n):
    lam = np.geomspace(0.01, 100, 2001)
    ratio = plancherel_density(lam, n) / (lam**2 * (1 + lam) ** (n - 3))
    K = ratio.max()
    assert np.isfinite(K) and K < 10
    assert ratio.min() > 0


@pytest.mark.parametrize("n", [3, 4, 5])
def test_density_positive_and_increasing(n):
    d = plancherel_density(LAMS, n)
    assert np.all(np.isfinite(d)) and np.all(d > 0)
    assert np.all(np.diff(d) > 0)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_c_function_modulus_matches_density(n):
    lam = np.geomspace(0.05, 50, 40)
    q = np.abs(c_function(lam, n)) ** -2 / plancherel_density(lam, n)
    np.testing.assert_allclose(q, q[0], rtol=1e-11)


# ---------------------------------------------------------------------------
# spherical functions

@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("lam", [0.0, 1.0, 17.0])
def test_phi_at_origin_is_one(n, lam):
    assert spherical_fn(lam, 0.0, n) == pytest.approx(1.0, abs=1e-14)


def test_phi_3d_closed_form_value():
    value = spherical_fn(2.0, 1.0, 3)
    assert value == pytest.approx(math.sin(2.0) / (2.0 * math.sinh(1.0)), abs=1e-13)
    assert value == pytest.approx(0.386853, abs=2e-5)
    assert spherical_fn_3d(2.0, 1.0) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_phi_bounded_by_phi0_and_envelope(n):
    rs = np.linspace(0.0, 30.0, 61)
    phi0 = np.array([spherical_fn(0.0, r, n) for r in rs])
    env = phi0 * np.exp(Dimension(n).rho_f * rs) / (rs + 1)
    # Phi_0 ~ C (1 + r) e^{-rho r}: the ratio levels off instead of growing
    assert env.max() < 20.0
    assert env[-1] <= 1.05 * env[-11]
    assert np.all(phi0 <= 20.0 * phi0_envelope(rs, n))
    for lam in (0.3, 2.0, 9.0):
        vals = np.array([spherical_fn(lam, r, n) for r in rs[:40]])
        assert np.all(np.abs(vals) <= phi0[:40] * (1 + 1e-12) + 1e-15)


def test_phi_low_confidence_warning():
    with pytest.warns(LowConfidenceWarning):
        spherical_fn(40.0, 20.0, 4)


def test_alt_rejects_origin():
    with pytest.raises(ValueError):
        spherical_fn_alt(1.0, 0.0, 4)


@pytest.mark.parametrize("lam, r", [(0.5, 0.3), (3.0, 2.0), (12.0, 7.5)])
def test_alt_reduces_to_closed_form_in_3d(lam, r):
    assert spherical_fn_alt(lam, r, 3) == pytest.approx(math.sin(lam * r) / (lam * math.sinh(r)),
                                                        rel=1e-11, abs=1e-15)


def test_alt_zero_frequency_n5():
    assert spherical_fn_alt(0.0, 2.0, 5) == pytest.approx(spherical_fn(0.0, 2.0, 5), abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_two_representations_agree_on_random_points(n):
    rng = np.random.default_rng(1000 + n)
    worst = 0.0
    for _ in range(100):
        r = rng.uniform(0.01, 20.0)
        lam = rng.uniform(0.0, min(25.0, 500.0 / r))
        worst = max(worst, abs(spherical_fn(lam, r, n) - spherical_fn_alt(lam, r, n)))
    assert worst <= 1e-9


@pytest.mark.parametrize("n", [4, 5])
def test_kernel_matches_pointwise_evaluation(n):
    lams = np.array([0.01, 0.8, 5.0, 31.9])
    rs = np.array([0.02, 0.9, 1.7, 6.0, 15.0])
    k = spherical_kernel(lams, rs, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowConfidenceWarning)
        ref = np.array([[spherical_fn(l, r, n) for r in rs] for l in lams])
    scale = np.array([[spherical_fn(0.0, r, n) for r in rs]])
    assert np.max(np.abs(k - ref) / scale) < 1e-10


# ---------------------------------------------------------------------------
# volume weight

def test_volume_weight_3d():
    r = np.linspace(0, 5, 11)
    np.testing.assert_allclose(volume_weight(r, 3), 4 * np.pi * np.sinh(r) ** 2, rtol=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_volume_weight_small_r(n):
    omega = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    assert volume_weight(1e-6, n) / 1e-6 ** (n - 1) == pytest.approx(omega, rel=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_volume_integral_against_refined_grid(n, plan_for):
    from hypwave.transform import RadialGrid

    coarse = RadialGrid.build(Dimension(n), 30.0, 1024)
    fine = RadialGrid.build(Dimension(n), 30.0, 10240)
    val = [np.dot(g.measure, np.exp(-4 * g.nodes)) for g in (coarse, fine)]
    assert val[0] == pytest.approx(val[1], rel=1e-8)
