import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covspec.model import (EnsembleSpec, ModelConfig, StepIntegrand, build_integrand,
                           haar_orthogonal, operator_norm)


def test_identity_spec():
    integ = build_integrand([EnsembleSpec("identity")], (0, 1), 3, seed=99)
    np.testing.assert_array_equal(integ.matrices[0], np.eye(3))


def test_two_point_layout_is_ascending_blocks():
    T = build_integrand([EnsembleSpec("diagonal_from_spectrum", two_point=(4, 1, 0.5))], (0, 1), 4).matrices[0]
    np.testing.assert_array_equal(np.diag(T), [1, 1, 4, 4])


def test_haar_rotated_pair_spectrum():
    T = build_integrand([EnsembleSpec("haar_rotated_diagonal", spectrum=(1, 4))], (0, 1), 2, seed=5).matrices[0]
    np.testing.assert_allclose(np.linalg.eigvalsh(T @ T.T), [1, 16], atol=1e-10)


@pytest.mark.parametrize("T, expected", [
    (np.eye(3), 1.0),
    (np.array([[0.0, 2.0], [0.0, 0.0]]), 2.0),
    (np.diag([1.0, -4.0]), 4.0),
])
def test_operator_norm(T, expected):
    assert operator_norm(T) == pytest.approx(expected, rel=1e-8)


def test_operator_norm_non_square():
    with pytest.raises(ValueError):
        operator_norm(np.zeros((2, 3)))


@pytest.mark.parametrize("bps", [(0, 0.6, 0.4, 1), (0.1, 1), (0, 0.9)])
def test_bad_breakpoints(bps):
    m = len(bps) - 1
    with pytest.raises(ValueError):
        StepIntegrand(bps, tuple(np.eye(2) for _ in range(m)), 1.0)


def test_tau0_violation_is_an_error():
    with pytest.raises(ValueError):
        StepIntegrand((0, 1), (2 * np.eye(2),), 1.0)


def test_spectrum_errors():
    with pytest.raises(ValueError):
        EnsembleSpec("diagonal_from_spectrum", spectrum=(1, 2, 3)).diagonal(4, sort=True)
    with pytest.raises(ValueError):
        EnsembleSpec("diagonal_from_spectrum", spectrum=(1, -2)).diagonal(4, sort=True)
    with pytest.raises(ValueError):
        EnsembleSpec("diagonal_from_spectrum", two_point=(1, 4, 0.5)).diagonal(3, sort=True)


def test_ratio_is_exact():
    assert ModelConfig(N=300, n=600).c == pytest.approx(0.5)
    assert ModelConfig(N=1, n=3).c * 3 == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32))
def test_haar_rotation_preserves_spectrum(N, seed):
    d = np.linspace(1, 4, N)
    Q = haar_orthogonal(N, seed, 1)
    np.testing.assert_allclose(Q.T @ Q, np.eye(N), atol=1e-10)
    np.testing.assert_allclose(np.linalg.eigvalsh(Q @ np.diag(d) @ Q.T), d, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32))
def test_build_integrand_is_reproducible_and_bounded(seed):
    specs = [EnsembleSpec("haar_rotated_diagonal", spectrum=(1, 2)),
             EnsembleSpec("common_basis_diagonal_family", spectrum=(3, 1), rotate=True)]
    a = build_integrand(specs, (0, 0.4, 1), 6, seed)
    b = build_integrand(specs, (0, 0.4, 1), 6, seed)
    for Ta, Tb in zip(a.matrices, b.matrices):
        np.testing.assert_array_equal(Ta, Tb)
        assert operator_norm(Ta) <= a.tau0 * (1 + 1e-8)
