import numpy as np
import pytest
from hypothesis import given, strategies as st

from covspec import rng

# reference outputs of SplitMix64 seeded with 0
SPLITMIX_ZERO = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_split_seed_matches_reference_stream():
    assert [rng.split_seed(0, i) for i in range(3)] == SPLITMIX_ZERO


def test_split_seed_rejects_bad_input():
    with pytest.raises(ValueError):
        rng.split_seed(-1, 0)
    with pytest.raises(ValueError):
        rng.split_seed(0, -1)


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_split_seed_is_64_bit(seed, index):
    assert 0 <= rng.split_seed(seed, index) < 2**64


def test_gaussian_vector_is_addressed_by_counter():
    a = rng.gaussian_vector(7, 5, 2, 3)
    b = rng.gaussian_vector(7, 5, 2, 3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, rng.gaussian_vector(7, 5, 3, 2))
    assert not np.array_equal(a, rng.gaussian_vector(7, 5, 2, 3, tag=rng.TAG_ENSEMBLE))


def test_too_many_counter_words():
    with pytest.raises(ValueError):
        rng.keyed_generator(0, 0, 1, 2, 3, 4)
