import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covspec.model import EnsembleSpec, StepIntegrand, build_integrand
from covspec.simulate import (CovariationMatrix, block_sizes, modified_estimator, overlap_lengths,
                              simulate_gram, simulate_increments, simulate_path_covariation)
from covspec.spectra import esd, ks_distance

from conftest import identity_integrand

SCALAR_ONE = StepIntegrand((0, 1), (np.eye(1),), 1.0)


def test_zero_integrand():
    zero = StepIntegrand((0, 1), (np.zeros((1, 1)),), 1.0)
    assert simulate_path_covariation(zero, 1, 0).entries[0, 0] == 0
    zero3 = StepIntegrand((0, 0.5, 1), (np.zeros((3, 3)),) * 2, 1.0)
    np.testing.assert_array_equal(simulate_gram(zero3, 4, 0).entries, np.zeros((3, 3)))


@pytest.mark.slow
def test_scalar_path_mean():
    vals = [simulate_path_covariation(SCALAR_ONE, 1, s).entries[0, 0] for s in range(100_000)]
    assert np.mean(vals) == pytest.approx(1, abs=0.02)


@pytest.mark.slow
def test_scalar_gram_mean():
    vals = [simulate_gram(SCALAR_ONE, 4, s).entries[0, 0] for s in range(100_000)]
    assert np.mean(vals) == pytest.approx(1, abs=0.02)


def test_trace_identity():
    integ = identity_integrand(200)
    vals = [np.trace(simulate_path_covariation(integ, 400, s).entries) / 200 for s in range(50)]
    assert np.mean(vals) == pytest.approx(1, abs=0.05)


def test_overlap_lengths_partition_unit_interval():
    bps = (0, 0.37, 0.5, 1)
    per_i = np.zeros(10)
    for pairs in overlap_lengths(bps, 10):
        for i, lam in pairs:
            per_i[i - 1] += lam
    np.testing.assert_allclose(per_i, 0.1)


def test_gram_block_sizes_use_floor():
    integ = identity_integrand(2, (0, 0.37, 1))
    assert block_sizes(integ, 10) == [3, 6]


def test_empty_gram_block_names_interval():
    integ = identity_integrand(2, (0, 0.05, 1))
    with pytest.raises(ValueError, match="interval 1"):
        simulate_gram(integ, 10, 0)


def test_modified_estimator_scalar_and_direction():
    D = simulate_increments(SCALAR_ONE, 5, 1)
    path = simulate_path_covariation(SCALAR_ONE, 5, 1, increments=D)
    assert modified_estimator(D, 5).entries[0, 0] == pytest.approx(path.entries[0, 0], rel=1e-12)
    e = np.array([0.6, 0.8])
    incs = [2.0 * e, -1.0 * e, 0.5 * e]
    tr = sum(v @ v for v in incs)
    np.testing.assert_allclose(modified_estimator(incs, 3).entries, tr * np.outer(e, e))


def test_modified_estimator_zero_increment():
    with pytest.raises(ValueError):
        modified_estimator([np.array([1.0, 0.0]), np.zeros(2)], 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 12), st.floats(0.2, 0.8))
def test_invariants_on_simulated_instances(seed, N, t):
    specs = [EnsembleSpec("haar_rotated_diagonal", spectrum=(1.0,) * N),
             EnsembleSpec("diagonal_from_spectrum", spectrum=tuple(np.linspace(0.5, 2, N)))]
    integ = build_integrand(specs, (0, t, 1), N, seed)
    n = 20
    D = simulate_increments(integ, n, seed)
    path = simulate_path_covariation(integ, n, seed, increments=D)
    gram = simulate_gram(integ, n, seed)
    mod = modified_estimator(D, n)
    for cm in (path, gram, mod):
        np.testing.assert_array_equal(cm.entries, cm.entries.T)
    assert path.min_eigenvalue_ok() and gram.min_eigenvalue_ok()
    assert np.trace(mod.entries) == pytest.approx(np.trace(path.entries), rel=1e-10)


@pytest.mark.parametrize("bp", [0.5, 0.37, 0.123])
def test_rank_proximity(two_interval, bp):
    integ = StepIntegrand((0, bp, 1), two_interval.matrices, two_interval.tau0)
    for seed in range(5):
        d = ks_distance(esd(simulate_path_covariation(integ, 80, seed).entries),
                        esd(simulate_gram(integ, 80, seed).entries))
        assert d <= 4 * integ.m / integ.N


def test_bit_reproducible(two_interval):
    a = simulate_gram(two_interval, 30, 11).entries
    b = simulate_gram(two_interval, 30, 11).entries
    np.testing.assert_array_equal(a, b)


def test_covariation_matrix_rejects_asymmetry():
    with pytest.raises(ValueError):
        CovariationMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), "path")
