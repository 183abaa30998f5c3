"""Admissible exponent regions in exact rational arithmetic, plus an empirical probe.

Points are handled as ``(1/p, 1/q)`` in the square ``[0, 1/2] x [0, 1/2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .specfun import as_dimension

HALF = Fraction(1, 2)
REGION_COLUMNS = ("region", "segment_id", "inv_p", "inv_q", "inv_p_float", "inv_q_float")


def _frac(x) -> Fraction:
    if isinstance(x, float):
        if math.isinf(x):
            return Fraction(0)
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


@dataclass(frozen=True)
class ExponentPair:
    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "inv_p", Fraction(self.inv_p))
        object.__setattr__(self, "inv_q", Fraction(self.inv_q))
        if not (0 <= self.inv_p <= HALF and 0 <= self.inv_q <= HALF):
            raise ValueError("(1/p, 1/q) must lie in [0, 1/2] x [0, 1/2]")

    @classmethod
    def from_pq(cls, p, q) -> "ExponentPair":
        """Build from exponents; ``math.inf`` maps to 0."""
        inv = lambda x: Fraction(0) if (isinstance(x, float) and math.isinf(x)) else 1 / _frac(x)
        return cls(inv(p), inv(q))

    @property
    def p(self):
        return math.inf if self.inv_p == 0 else 1 / self.inv_p

    @property
    def q(self):
        return math.inf if self.inv_q == 0 else 1 / self.inv_q

    def satisfies_invariants(self) -> bool:
        return 0 < self.inv_p <= HALF and 0 < self.inv_q < HALF


@dataclass(frozen=True)
class RegionReport:
    classical: bool
    energy: bool
    beta: Fraction | None
    boundary_case: bool
    classical_boundary: bool
    sobolev_endpoint: bool = False
    square_edge: bool = False


def beta(q, n) -> Fraction:
    """Regularity loss ``(n+1)/2 (1/2 - 1/q)`` for q > 2, exact."""
    q = _frac(q)
    if q <= 2:
        raise ValueError("q must be > 2")
    return Fraction(as_dimension(n).n + 1, 2) * (HALF - 1 / q)


def _classical_lhs(pair: ExponentPair, n: int) -> tuple[Fraction, Fraction]:
    return 2 * pair.inv_p + (n - 1) * pair.inv_q, Fraction(n - 1, 2)


def _energy_lhs(pair: ExponentPair, n: int) -> tuple[Fraction, Fraction]:
    return pair.inv_p + n * pair.inv_q, Fraction(n, 2) - 1


def is_admissible_classical(pair: ExponentPair, n) -> bool:
    """``(1/p, 1/q) in (0, 1/2] x (0, 1/2)`` with ``2/p + (n-1)/q >= (n-1)/2``."""
    n = as_dimension(n).n
    lhs, rhs = _classical_lhs(pair, n)
    return pair.satisfies_invariants() and lhs >= rhs


def is_admissible_energy(pair: ExponentPair, n) -> RegionReport:
    """Energy-data region: ``1/p, 1/q in (0, 1/2)`` and ``1/p + n/q >= n/2 - 1``.

    Points on the edge of the square are flagged with ``square_edge`` and are
    never energy-admissible; the Sobolev endpoint ``(0, (n-2)/(2n))`` carries
    its own flag as well.
    """
    n = as_dimension(n).n
    lhs, rhs = _energy_lhs(pair, n)
    open_square = 0 < pair.inv_p < HALF and 0 < pair.inv_q < HALF
    clhs, crhs = _classical_lhs(pair, n)
    return RegionReport(
        classical=is_admissible_classical(pair, n),
        energy=open_square and lhs >= rhs,
        beta=beta(1 / pair.inv_q, n) if 0 < pair.inv_q < HALF else None,
        boundary_case=lhs == rhs,
        classical_boundary=clhs == crhs,
        sobolev_endpoint=pair.inv_p == 0 and pair.inv_q == Fraction(n - 2, 2 * n),
        square_edge=not open_square,
    )


def y_pair(n) -> ExponentPair:
    """The ``L^{p_c} L^{2 p_c}`` exponents of the Y-norm."""
    pc = as_dimension(n).p_c
    return ExponentPair(1 / pc, 1 / (2 * pc))


def region_boundary(n, resolution: int = 64) -> list[tuple[str, int, Fraction, Fraction]]:
    """Boundary lines of both regions across the square, as exact rational points.

    Rows are ``(region, segment_id, inv_p, inv_q)``. Each defining line is
    sampled at ``resolution + 1`` equally spaced values of ``1/p`` in
    [0, 1/2]; the Sobolev endpoint is emitted as its own one-point segment.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    n = as_dimension(n).n
    rows = []
    for k in range(resolution + 1):
        x = Fraction(k, 2 * resolution)
        rows.append(("classical", 0, x, HALF - 2 * x / (n - 1)))
    for k in range(resolution + 1):
        x = Fraction(k, 2 * resolution)
        rows.append(("energy", 0, x, (Fraction(n, 2) - 1 - x) / n))
    rows.append(("sobolev_point", 1, Fraction(0), Fraction(n - 2, 2 * n)))
    return rows


def write_region_csv(n, path, resolution: int = 64, meta: dict | None = None) -> Path:
    """CSV with columns region, segment_id, inv_p, inv_q (exact) plus float renderings."""
    from .persist import write_csv

    n = as_dimension(n).n
    meta = meta or {"run_checksum": f"region-n{n}-res{resolution}"}
    rows = [(region, seg, str(x), str(y), f"{float(x):.17g}", f"{float(y):.17g}")
            for region, seg, x, y in region_boundary(n, resolution)]
    return write_csv(path, REGION_COLUMNS, rows, meta)


def read_region_csv(path) -> list[tuple[str, int, Fraction, Fraction]]:
    from .persist import read_csv

    _, columns, rows = read_csv(path)
    ix = {c: k for k, c in enumerate(columns)}
    return [(row[ix["region"]], int(row[ix["segment_id"]]), Fraction(row[ix["inv_p"]]),
             Fraction(row[ix["inv_q"]])) for row in rows]


# ---------------------------------------------------------------------------
# empirical probe

@dataclass(frozen=True)
class StrichartzProbe:
    ratio: float
    ratio_coarse: float
    ratios: np.ndarray

    @property
    def stride_sensitivity(self) -> float:
        """Relative change when the time sampling is coarsened by a factor 2."""
        return abs(self.ratio_coarse - self.ratio) / self.ratio


def spacetime_norm(plan, u_hat: np.ndarray, ut_hat: np.ndarray, pair: ExponentPair, T: float,
                   dt: float) -> float:
    """Discrete ``||S_L(t)(u0, u1)||_{L^p([0,T]; L^q)}`` by a left Riemann sum in t."""
    lam = plan.spectral.nodes
    times = np.arange(0.0, T, dt)
    p, q = float(pair.p), float(pair.q)
    total = 0.0
    for chunk in np.array_split(times, max(1, times.size // 128)):
        arg = np.outer(lam, chunk)
        coeffs = np.cos(arg) * u_hat[:, None] + (np.sin(arg) / lam[:, None]) * ut_hat[:, None]
        u = plan.inverse_matrix @ coeffs
        a = np.abs(u)
        peak = a.max(axis=0)
        peak[peak == 0] = 1.0
        lq = peak * (plan.radial.measure @ (a / peak) ** q) ** (1.0 / q)
        total += float(np.sum(lq ** p)) * dt
    return total ** (1.0 / p)


def strichartz_probe(plan, pair: ExponentPair, ensemble, T: float, dt: float = 0.05) -> StrichartzProbe:
    """Max over ``ensemble`` of ``||u||_{L^p L^q} / ||(u0, u1)||_{H^{0,1} x L^2}`` for the free flow.

    ``ensemble`` is a sequence of ``(u_hat, ut_hat)`` spectral coefficient pairs.
    """
    report = is_admissible_energy(pair, plan.dim)
    if not report.energy:
        raise ValueError("pair is not energy-admissible")
    lam = plan.spectral.nodes
    m = plan.spectral_measure
    fine, coarse = [], []
    for u_hat, ut_hat in ensemble:
        data = math.sqrt(float(np.dot(m, lam * lam * u_hat * u_hat + ut_hat * ut_hat)))
        fine.append(spacetime_norm(plan, u_hat, ut_hat, pair, T, dt) / data)
        coarse.append(spacetime_norm(plan, u_hat, ut_hat, pair, T, 2 * dt) / data)
    fine = np.array(fine)
    return StrichartzProbe(float(fine.max()), float(max(coarse)), fine)


def empirical_ratio(plan, pair: ExponentPair, ensemble_size: int = 10, T: float = 20.0,
                    seed: int = 0, dt: float = 0.05) -> float:
    """Boundedness probe: worst ratio over a seeded ensemble of smooth random data."""
    from .data import random_state

    if ensemble_size < 10:
        raise ValueError("ensemble_size must be >= 10")
    rng = np.random.default_rng(seed)
    ensemble = []
    for _ in range(ensemble_size):
        s = random_state(plan, rng)
        ensemble.append((s.u_hat, s.ut_hat))
    return strichartz_probe(plan, pair, ensemble, T, dt).ratio
