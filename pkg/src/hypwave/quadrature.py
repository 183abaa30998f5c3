"""Gauss-Legendre building blocks shared by the special functions and grids."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an ``order``-point Gauss-Legendre rule on [a, b]."""
    x, w = _legendre_rule(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss_legendre(a: float, b: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with ``panels`` equal panels of ``order`` points each.

    Nodes come back sorted; they never include the panel endpoints.
    """
    if panels < 1 or order < 1:
        raise ValueError("panels and order must be positive")
    x, w = _legendre_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def adaptive_composite(f, a: float, b: float, *, tol: float = 1e-12, order: int = 16,
                       max_nodes: int = 2**16, breakpoints=None) -> tuple[complex, float, bool]:
    """Integrate ``f`` over [a, b] by repeatedly halving every panel.

    ``f`` must be vectorized. The starting panels are delimited by
    ``breakpoints`` (default: the single panel [a, b]). Iteration stops once
    two successive estimates differ by less than ``tol`` (absolute) or the
    node budget is spent.

    Returns
    -------
    value, last_difference, converged
    """
    edges = np.asarray([a, b] if breakpoints is None else breakpoints, dtype=float)
    x, w = _legendre_rule(order)

    def estimate(edges):
        half = 0.5 * np.diff(edges)
        nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
        return np.sum((half[:, None] * w[None, :]) * f(nodes))

    prev = estimate(edges)
    diff = np.inf
    rounds = 0
    while 2 * (edges.size - 1) * order <= max_nodes:
        mids = 0.5 * (edges[:-1] + edges[1:])
        edges = np.sort(np.concatenate([edges, mids]))
        cur = estimate(edges)
        diff = abs(cur - prev)
        prev = cur
        rounds += 1
        if diff < tol and rounds >= 2:
            return prev, diff, True
    return prev, diff, False


def lagrange_derivative_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix of the interpolating polynomial through ``nodes``.

    Uses barycentric weights; exact for polynomials of degree < len(nodes).
    """
    x = np.asarray(nodes, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    d = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d
