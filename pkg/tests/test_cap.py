import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphere_neumann.cap import (
    area_to_radius, cap_mu2, g_ratio, mu0j_derivative_check, radius_to_area, rayleigh_sl_k,
    solve_cap_mode,
)
from sphere_neumann.conformal import cap_profile
from sphere_neumann.radial import solve_sl_G

RADII = [0.1 * i for i in range(1, 32)]


@pytest.mark.parametrize("R", [0.2, 1.0, math.pi / 2, 2.5, 3.1])
def test_constant_mode(R):
    spec = solve_cap_mode(R, 0, 2)
    assert abs(spec.eigenvalues[0]) < 1e-6
    v = spec.eigenfunctions[:, 0]
    assert np.ptp(v) < 1e-6 * abs(v).max()


def test_hemisphere_first_mode():
    assert solve_cap_mode(math.pi / 2, 1).eigenvalues[0] == pytest.approx(2.0, abs=1e-4)


def test_hemisphere_mode_eigenfunction_is_sine():
    spec = solve_cap_mode(math.pi / 2, 1)
    v = spec.eigenfunctions[:, 0]
    ref = np.sin(spec.grid)
    ref /= math.sqrt(np.sum(spec.weights * ref**2))
    assert np.max(np.abs(v - ref)) < 1e-4


def test_near_antipode_mu02():
    assert solve_cap_mode(math.pi - 1e-3, 0, 2).eigenvalues[1] == pytest.approx(2.0, abs=1e-2)


def test_normalization():
    spec = solve_cap_mode(2.0, 2, 3)
    norms = np.sum(spec.weights[:, None] * spec.eigenfunctions**2, axis=0)
    assert np.allclose(norms, 1.0, atol=1e-10)


@pytest.mark.parametrize("k", [0, 1, 3])
def test_eigenvalues_strictly_increasing(k):
    assert np.all(np.diff(solve_cap_mode(1.7, k, 5).eigenvalues) > 0)


def test_radius_out_of_range():
    for R in (0.0, -1.0, math.pi, 4.0):
        with pytest.raises(ValueError):
            solve_cap_mode(R, 1)
        with pytest.raises(ValueError):
            cap_mu2(R)


def test_cap_mu2_hemisphere():
    res = cap_mu2(math.pi / 2)
    assert float(res) == pytest.approx(2.0, abs=1e-4)
    assert res.gap > 0
    assert res.mu02 == pytest.approx(6.0, abs=1e-3)


def test_gap_sweep_positive():
    assert all(cap_mu2(R).gap > 0 for R in RADII)


def test_mu02_decreasing_beyond_hemisphere():
    R = np.linspace(math.pi / 2 + 0.05, 3.0, 12)
    mu02 = [solve_cap_mode(r, 0, 2).eigenvalues[1] for r in R]
    assert np.all(np.diff(mu02) < 0)


def test_mu11_below_test_function_bound():
    for R in RADII:
        x = math.sin(R / 2) ** 2
        assert cap_mu2(R).mu11 <= g_ratio(x) + 1e-9


def test_area_to_radius():
    assert area_to_radius(2 * math.pi) == pytest.approx(math.pi / 2, abs=1e-15)
    assert 0 < area_to_radius(1e-12) < 1e-5
    assert area_to_radius(4 * math.pi * math.sin(1.0) ** 2) == pytest.approx(2.0, abs=1e-12)
    for M in (0.0, -1.0, 4 * math.pi, 20.0):
        with pytest.raises(ValueError):
            area_to_radius(M)


@settings(max_examples=50)
@given(st.floats(1e-3, math.pi - 1e-3))
def test_radius_area_round_trip(R):
    assert area_to_radius(radius_to_area(R)) == pytest.approx(R, abs=1e-12)


def test_g_ratio_values():
    assert g_ratio(Fraction(3, 4)) == Fraction(5, 3)
    assert abs(g_ratio(0.75) - 5 / 3) < 1e-12
    # g(1/2) = g(1) = 2: the bound for mu_11 is sharp at the hemisphere
    assert g_ratio(Fraction(1, 2)) == 2
    assert g_ratio(Fraction(1)) == 2


def test_g_ratio_below_two_inside():
    x = np.linspace(0.5, 1.0, 10_002)[1:-1]
    assert np.max(g_ratio(x)) < 2


def test_g_ratio_domain():
    for x in (0, 1.5, -0.1, 2.0):
        with pytest.raises(ValueError):
            g_ratio(x)


def test_mu0j_derivative_formula():
    a, fd = mu0j_derivative_check(2.0, 2)
    assert a == pytest.approx(fd, rel=1e-3)
    a, fd = mu0j_derivative_check(1.0, 3)
    assert a == pytest.approx(fd, rel=1e-3)


@pytest.mark.parametrize("R", [1.7, 2.3, 2.9])
def test_mu0j_derivative_negative_beyond_hemisphere(R):
    a, fd = mu0j_derivative_check(R, 2)
    assert a < 0 and fd < 0


def test_mu0j_requires_nonconstant_mode():
    with pytest.raises(ValueError):
        mu0j_derivative_check(1.0, 1)


def test_rayleigh_sine_closed_form():
    for R in (0.5, 1.3, 2.0, 2.8):
        s2 = math.sin(R / 2) ** 2
        closed = (2 * s2**2 - 3 * s2 + 3) / (s2 * (3 - 2 * s2))
        assert rayleigh_sl_k(np.sin, R, 1, np.cos) == pytest.approx(closed, rel=1e-10)


def test_rayleigh_sine_matches_g_ratio():
    rng = np.random.default_rng(3)
    for R in rng.uniform(0.1, 3.0, 5):
        val = rayleigh_sl_k(np.sin, R, 1, np.cos)
        assert abs(val - g_ratio(math.sin(R / 2) ** 2)) < 1e-10


def test_rayleigh_eigenfunction_consistency():
    spec = solve_cap_mode(2.2, 1, 3)
    for j in range(3):
        assert rayleigh_sl_k(spec.eigenfunctions[:, j], 2.2, 1) == pytest.approx(
            spec.eigenvalues[j], abs=1e-8)


def test_rayleigh_zero_norm():
    with pytest.raises(ZeroDivisionError):
        rayleigh_sl_k(np.zeros(100), 1.0, 1)


@pytest.mark.parametrize("R", [0.7, math.pi / 2, 2.4])
def test_cap_matches_profile_problem(R):
    M = radius_to_area(R)
    k_prof = solve_sl_G(cap_profile(M, 2048)).kappa1
    assert abs(cap_mu2(R).mu11 - k_prof) / k_prof < 1e-4
