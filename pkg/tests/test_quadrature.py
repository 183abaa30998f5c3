from __future__ import annotations

import math

import numpy as np
import pytest

from hypwave.quadrature import (adaptive_composite, composite_gauss_legendre, gauss_legendre,
                                lagrange_derivative_matrix)


@pytest.mark.parametrize("order", [2, 5, 12])
def test_gauss_legendre_exact_for_polynomials(order):
    x, w = gauss_legendre(-1.0, 3.0, order)
    for k in range(2 * order):
        assert np.dot(w, x**k) == pytest.approx((3.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1),
                                                rel=1e-12, abs=1e-12)


def test_composite_rule_sorted_and_positive():
    x, w = composite_gauss_legendre(0.0, 30.0, 60, 18)
    assert x.size == 1080
    assert np.all(np.diff(x) > 0) and np.all(w > 0)
    assert 0 < x[0] and x[-1] < 30
    assert w.sum() == pytest.approx(30.0, rel=1e-14)


def test_composite_rejects_empty():
    with pytest.raises(ValueError):
        composite_gauss_legendre(0, 1, 0, 4)


def test_adaptive_converges_on_oscillatory_integrand():
    lam = 200.0
    value, diff, ok = adaptive_composite(lambda t: np.cos(lam * t), 0.0, math.pi / 3)
    assert ok and diff < 1e-12
    assert value == pytest.approx(math.sin(lam * math.pi / 3) / lam, abs=1e-13)


def test_adaptive_reports_failure_when_budget_is_spent():
    _, _, ok = adaptive_composite(lambda t: np.sin(1e5 * t), 0.0, 1.0, max_nodes=256)
    assert not ok


def test_lagrange_derivative_exact_on_polynomials():
    x, _ = gauss_legendre(0.0, 0.5, 12)
    d = lagrange_derivative_matrix(x)
    np.testing.assert_allclose(d @ x**7, 7 * x**6, rtol=1e-10, atol=1e-12)
