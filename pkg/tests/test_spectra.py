import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covspec.spectra import EmpiricalSpectralDistribution, esd, esd_moment, ks_distance


def dist(vals):
    return esd(np.diag(np.asarray(vals, dtype=float)))


def test_esd_examples():
    np.testing.assert_array_equal(esd(np.eye(3)).eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(dist([3, 1, 2]).eigenvalues, [1, 2, 3])
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((2, 2)))
    np.testing.assert_allclose(esd(Q @ np.diag([1, 4]) @ Q.T).eigenvalues, [1, 4], atol=1e-10)


def test_esd_rejects_asymmetric():
    with pytest.raises(ValueError):
        esd(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_moments():
    assert esd_moment(np.eye(4), 5) == pytest.approx(1)
    assert esd_moment(dist([1, 2, 3]), 1) == pytest.approx(2)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 6), st.integers(0, 2**32))
def test_trace_and_eigen_routes_agree(N, k, seed):
    X = np.random.default_rng(seed).standard_normal((N, N))
    A = (X + X.T) / 2
    d = esd(A)
    assert esd_moment(A, k) == pytest.approx(esd_moment(d, k), rel=1e-9, abs=1e-9 * np.abs(d.eigenvalues).max() ** k)
    assert d.moment(1) == pytest.approx(np.trace(A) / N, abs=1e-10)


def test_psd_eigenvalues_nonnegative():
    X = np.random.default_rng(1).standard_normal((10, 4))
    A = X @ X.T
    assert esd(A).eigenvalues.min() >= -1e-9 * np.trace(A) / 10


@pytest.mark.parametrize("a, b, expected", [
    ([1, 2], [1, 2], 0.0),
    ([1, 2], [1, 3], 0.5),
    ([1, 2], [3, 4], 1.0),
])
def test_ks_examples(a, b, expected):
    assert ks_distance(dist(a), dist(b)) == expected


values = st.lists(st.integers(-5, 5), min_size=1, max_size=8)


@given(values, values, values)
def test_ks_is_a_metric(a, b, c):
    da, db, dc = dist(a), dist(b), dist(c)
    assert 0 <= ks_distance(da, db) <= 1
    assert ks_distance(da, db) == ks_distance(db, da)
    assert ks_distance(da, dc) <= ks_distance(da, db) + ks_distance(db, dc) + 1e-12
    assert ks_distance(da, da) == 0


def test_cdf_is_a_step_function():
    d = EmpiricalSpectralDistribution(np.array([1.0, 2.0, 2.0, 5.0]))
    np.testing.assert_allclose(d.cdf([0, 1, 2, 4.9, 5]), [0, 0.25, 0.75, 0.75, 1])
