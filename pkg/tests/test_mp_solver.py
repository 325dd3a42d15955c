import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from covspec.mixed_moments import MixedMomentProvider
from covspec.mp_solver import (NonConvergenceError, SpectralLaw, carleman_bound_check, companion_to_esd,
                               esd_to_companion, mp_edges, mp_reference_density, mp_reference_mass,
                               mp_residual, solve_grid, solve_mp_equation, stieltjes_transform)
from covspec.qgraph import evaluate_expansion, oracle_moment_expansion

DELTA1 = SpectralLaw.point(1.0)


def test_stieltjes_examples():
    assert stieltjes_transform(DELTA1, 1j) == pytest.approx(0.5 + 0.5j)
    assert stieltjes_transform(SpectralLaw.point(0.0), 1j) == pytest.approx(1j)
    mix = SpectralLaw((1.0, 3.0), (0.5, 0.5))
    assert stieltjes_transform(mix, 2 + 1j) == pytest.approx(0.5j)


def test_lower_half_plane_rejected():
    with pytest.raises(ValueError):
        stieltjes_transform(DELTA1, 1 - 1j)


def test_cauchy_kernel_value():
    eta = 1e-3
    dens = stieltjes_transform(DELTA1, 1j * eta).imag / math.pi
    assert dens == pytest.approx(eta / (1 + eta**2) / math.pi, rel=1e-12)
    assert dens == pytest.approx(3.18e-4, abs=1e-6)


def test_zero_law():
    for z in (1j, 0.3 + 2j):
        assert solve_mp_equation(SpectralLaw.point(0.0), 0.5, z) == pytest.approx(-1 / z, abs=1e-12)


def test_residual_postcondition():
    z = 1 + 1e-3j
    v = solve_mp_equation(DELTA1, 0.5, z)
    assert mp_residual(DELTA1, 0.5, z, v) < 1e-10


def test_monotone_sanity():
    E = np.linspace(0.2, 2.5, 24)
    v = solve_mp_equation(DELTA1, 0.5, E + 1e-3j)
    assert np.all(v.imag > 0.1)
    assert solve_mp_equation(DELTA1, 0.5, 5 + 1e-3j).imag < 0.02


def test_non_convergence_raises():
    with pytest.raises(NonConvergenceError):
        solve_mp_equation(DELTA1, 0.5, 1 + 1e-4j, max_iter=3)


def test_companion_transform():
    z = 0.7 + 0.2j
    assert companion_to_esd(-1 / z, z, 1.0) == pytest.approx(-1 / z)
    slope = companion_to_esd(1.0, z, 0.25) - companion_to_esd(0.0, z, 0.25)
    assert slope == pytest.approx(4.0)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.floats(0.05, 4), st.floats(-3, 3), st.floats(0.01, 3))
def test_companion_round_trip(m, c, x, y):
    z = complex(x, y)
    assert companion_to_esd(esd_to_companion(m, z, c), z, c) == pytest.approx(m, abs=1e-12 * (1 + abs(m) + 1 / y))


def test_reference_density():
    assert mp_reference_density(0.5, 1.0) == pytest.approx(math.sqrt(1.9142 * 0.9142) / math.pi, abs=1e-4)
    assert mp_reference_density(0.5, 1.0) == pytest.approx(0.4211, abs=1e-4)
    a, b = mp_edges(0.5)
    assert mp_reference_density(0.5, a - 0.01) == 0 and mp_reference_density(0.5, b + 0.01) == 0
    for c in (0.1, 0.5, 1.0):
        assert mp_reference_mass(c) == pytest.approx(1, abs=1e-6)


def test_recovered_density_at_one():
    grid = solve_grid(DELTA1, 0.5, np.array([1.0]), eta=1e-4)
    assert grid.density[0] == pytest.approx(0.4211, abs=2e-2)


def test_grid_mass_and_herglotz():
    grid = solve_grid(DELTA1, 0.5, eta=1e-3)
    assert grid.converged.all()
    assert grid.mass() == pytest.approx(1, abs=1e-2)
    assert np.all(grid.v_values.imag > 0) and np.all(grid.m_values.imag > 0)
    assert np.all(grid.density >= -1e-9)


def test_reference_law_stieltjes_matches_discretized():
    law = SpectralLaw.mp_reference(0.5)
    z = 1.5 + 0.3j
    assert stieltjes_transform(law, z) == pytest.approx(stieltjes_transform(law.discretize(4000), z), abs=1e-3)


def test_spectral_law_validation():
    with pytest.raises(ValueError):
        SpectralLaw((1.0,), (0.5,))
    with pytest.raises(ValueError):
        SpectralLaw((-1.0,), (1.0,))


def oracle_moments(K, c=1):
    return [evaluate_expansion(oracle_moment_expansion(k, 1), c, [1], MixedMomentProvider.constant(1))
            for k in range(1, K + 1)]


def test_carleman_examples():
    mom = oracle_moments(6)
    assert mom[1] == 2 and mom[3] == 14
    rep = carleman_bound_check(mom, 1, 1.0, 1.0, [1.0])
    assert rep.B == 4
    assert [(o, ok) for o, _, _, ok in rep.checks] == [(2, True), (4, True), (6, True)]
    assert rep.passed
    assert rep.statement.startswith("Carleman sum diverges: lower bound Σ B^{-1} = ∞")


def test_carleman_violation_is_reported():
    rep = carleman_bound_check([1, 100], 1, 1.0, 1.0, [1.0])
    assert not rep.passed and "not established" in rep.statement
