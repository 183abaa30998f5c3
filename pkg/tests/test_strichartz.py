from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from conftest import cached_plan
from hypwave import strichartz as st
from hypwave.data import spectral_bump
from hypwave.harness.scenarios import lattice_mismatches
from hypwave.persist import read_csv

HALF = F(1, 2)


def pair(p, q):
    return st.ExponentPair.from_pq(p, q)


# ---------------------------------------------------------------------------
# beta

def test_beta_y_pair_3d():
    assert st.beta(10, 3) == F(4, 5)


@pytest.mark.parametrize("q", [2, F(3, 2), 1])
def test_beta_domain(q):
    with pytest.raises(ValueError):
        st.beta(q, 3)


def test_beta_vanishes_at_q_two():
    assert st.beta(2 + F(1, 10**9), 4) < F(1, 10**8)


@settings(max_examples=100)
@given(hst.fractions(F(201, 100), 1000), hst.fractions(F(201, 100), 1000), hst.sampled_from([3, 4, 5]))
def test_beta_monotone_and_exact(q1, q2, n):
    b1, b2 = st.beta(q1, n), st.beta(q2, n)
    assert isinstance(b1, F)
    assert (b1 < b2) == (q1 < q2)


# ---------------------------------------------------------------------------
# classification

def test_classical_examples():
    assert st.is_admissible_classical(pair(4, 4), 3)
    assert st.is_admissible_energy(pair(4, 4), 3).classical_boundary
    assert not st.is_admissible_classical(pair(100, 100), 3)


@pytest.mark.parametrize("n, expected", [(3, True), (4, False), (5, False)])
def test_classical_corner_near_inv_q_zero(n, expected):
    assert st.is_admissible_classical(st.ExponentPair(HALF, F(1, 10**6)), n) is expected


def test_energy_examples():
    r3 = st.is_admissible_energy(pair(5, 10), 3)
    assert r3.energy and r3.boundary_case and r3.beta == F(4, 5)
    r5 = st.is_admissible_energy(pair(F(7, 3), F(14, 3)), 5)
    assert r5.energy and r5.boundary_case
    assert st.y_pair(5) == pair(F(7, 3), F(14, 3))
    for n in (3, 4, 5):
        assert not st.is_admissible_energy(pair(2, 7), n).energy


@pytest.mark.parametrize("n", [3, 4, 5])
def test_y_pair_is_energy_boundary(n):
    rep = st.is_admissible_energy(st.y_pair(n), n)
    assert rep.energy and rep.boundary_case


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sobolev_endpoint_flagged_not_admitted(n):
    rep = st.is_admissible_energy(st.ExponentPair(0, F(n - 2, 2 * n)), n)
    assert rep.sobolev_endpoint and rep.boundary_case and not rep.energy
    assert rep.square_edge


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("x, y", [(0, F(1, 4)), (HALF, F(1, 3)), (F(1, 4), HALF), (HALF, HALF),
                                  (F(1, 3), 0)])
def test_square_edge_points_outside_and_flagged(n, x, y):
    rep = st.is_admissible_energy(st.ExponentPair(x, y), n)
    assert rep.square_edge and not rep.energy


def test_interior_points_not_flagged_as_edge():
    assert not st.is_admissible_energy(st.ExponentPair(F(1, 4), F(1, 4)), 3).square_edge


def test_pair_invariants():
    with pytest.raises(ValueError):
        st.ExponentPair(F(3, 5), F(1, 4))
    with pytest.raises(ValueError):
        st.ExponentPair(F(1, 4), F(-1, 4))
    assert not st.ExponentPair(F(1, 4), HALF).satisfies_invariants()
    assert pair(math.inf, 4).inv_p == 0


def _brute(n, i, j, m):
    """Integer-only evaluation of both defining inequalities at (i/m, j/m)."""
    half = m // 2
    classical = 0 < i <= half and 0 < j < half and 2 * 2 * i + 2 * (n - 1) * j >= (n - 1) * m
    energy = 0 < i < half and 0 < j < half and 2 * i + 2 * n * j >= (n - 2) * m
    return classical, energy


@pytest.mark.parametrize("n", [3, 4, 5])
def test_lattice_against_brute_force(n):
    m = 256
    mismatches = 0
    for i in range(1, 129):
        for j in range(1, 129):
            p = st.ExponentPair(F(i, m), F(j, m))
            rep = st.is_admissible_energy(p, n)
            c, e = _brute(n, i, j, m)
            mismatches += (rep.classical != c) + (rep.energy != e)
            mismatches += st.is_admissible_classical(p, n) != c
    assert mismatches == 0
    assert lattice_mismatches(n) == (0, 0)


@settings(max_examples=200)
@given(hst.sampled_from([3, 4, 5]), hst.fractions(0, HALF), hst.fractions(0, HALF),
       hst.fractions(0, HALF))
def test_energy_region_monotone_in_inv_q(n, x, y, y2):
    if not (0 < x < HALF and 0 < y < y2 < HALF):
        return
    if st.is_admissible_energy(st.ExponentPair(x, y), n).energy:
        assert st.is_admissible_energy(st.ExponentPair(x, y2), n).energy


def test_3d_regions_agree_with_direct_inequalities():
    """For n = 3 each flag is exactly its own inequality on the open square."""
    for i in range(1, 50):
        for j in range(1, 50):
            x, y = F(i, 100), F(j, 100)
            rep = st.is_admissible_energy(st.ExponentPair(x, y), 3)
            assert rep.classical == (2 * x + 2 * y >= 1)
            assert rep.energy == (x + 3 * y >= HALF)


# ---------------------------------------------------------------------------
# boundary export

def test_boundary_resolution_floor():
    with pytest.raises(ValueError):
        st.region_boundary(3, 8)


@pytest.mark.parametrize("n, vertices", [
    (3, [(HALF, F(0)), (F(0), F(1, 6))]),
    (4, [(HALF, F(1, 8)), (F(0), F(1, 4))]),
    (5, [(HALF, F(1, 5)), (F(0), F(3, 10))]),
])
def test_energy_line_vertices(n, vertices):
    pts = {(x, y) for region, _, x, y in st.region_boundary(n, 32) if region == "energy"}
    for v in vertices:
        assert v in pts


@pytest.mark.parametrize("n", [3, 4, 5])
def test_boundary_self_consistency(n):
    rows = st.region_boundary(n, 40)
    assert ("sobolev_point", 1, F(0), F(n - 2, 2 * n)) in rows
    for region, _, x, y in rows:
        assert isinstance(x, F) and isinstance(y, F)
        rep = st.is_admissible_energy(st.ExponentPair(x, y), n)
        if region == "classical":
            assert rep.classical_boundary
        else:
            assert rep.boundary_case


def test_region_csv_exact_roundtrip(tmp_path):
    path = st.write_region_csv(4, tmp_path / "r.csv", 32)
    meta, columns, _ = read_csv(path)
    assert columns[:4] == ["region", "segment_id", "inv_p", "inv_q"]
    assert meta["schema_version"] == "1" and "run_checksum" in meta
    assert st.read_region_csv(path) == st.region_boundary(4, 32)


# ---------------------------------------------------------------------------
# empirical probe

def _ensemble(plan, seed, size=10):
    from hypwave.data import random_state

    rng = np.random.default_rng(seed)
    return [(s.u_hat, s.ut_hat) for s in (random_state(plan, rng) for _ in range(size))]


def test_probe_homogeneous():
    plan = cached_plan(3)
    ens = _ensemble(plan, 3)
    a = st.strichartz_probe(plan, st.y_pair(3), ens, 10.0)
    b = st.strichartz_probe(plan, st.y_pair(3), [(7 * u, 7 * v) for u, v in ens], 10.0)
    np.testing.assert_allclose(a.ratios, b.ratios, rtol=1e-12)


def test_probe_saturates_in_time():
    plan = cached_plan(3)
    r = {T: st.empirical_ratio(plan, st.y_pair(3), 10, T, seed=4) for T in (10.0, 20.0, 40.0)}
    assert r[10.0] <= r[20.0] <= r[40.0]
    assert r[40.0] / r[20.0] - 1 < 0.05


def test_probe_stride_sensitivity_reported():
    plan = cached_plan(4)
    probe = st.strichartz_probe(plan, st.y_pair(4), _ensemble(plan, 5), 10.0)
    assert 0 <= probe.stride_sensitivity < 0.05


def test_single_mode_ratio_reproducible():
    plan = cached_plan(3)
    coeffs = spectral_bump(plan, 5.0, 1.0)
    data = [(coeffs, np.zeros_like(coeffs))]
    a = st.strichartz_probe(plan, st.y_pair(3), data, 10.0).ratio
    b = st.strichartz_probe(plan, st.y_pair(3), data, 10.0).ratio
    assert np.isfinite(a) and f"{a:.3g}" == f"{b:.3g}"
    assert st.empirical_ratio(plan, st.y_pair(3), 10, 10.0, seed=1) == \
        st.empirical_ratio(plan, st.y_pair(3), 10, 10.0, seed=1)


def test_probe_preconditions():
    plan = cached_plan(3)
    with pytest.raises(ValueError, match="energy-admissible"):
        st.empirical_ratio(plan, pair(100, 100), 10, 5.0)
    with pytest.raises(ValueError, match="ensemble_size"):
        st.empirical_ratio(plan, st.y_pair(3), 5, 5.0)
