import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_array_equal
from pytest import raises

from qandysig.errors import ParameterError
from qandysig.rng import Rng, Stream


@given(seed=st.integers(0, 2 ** 64 - 1), stream=st.integers(0, 100))
def test_same_seed_and_stream_repeat(seed: int, stream: int):
    a, b = Rng(seed, stream), Rng(seed, stream)
    assert_array_equal(a.bits(32), b.bits(32))
    assert_array_equal(a.characters(16), b.characters(16))
    assert a.coin() == b.coin()


def test_seed_is_reduced_mod_2_64():
    assert Rng(-1).seed == 2 ** 64 - 1
    assert_array_equal(Rng(2 ** 64 + 5).bits(64), Rng(5).bits(64))


def test_streams_differ():
    draws = {Rng(0, s).bits(64).tobytes() for s in Stream}
    assert len(draws) == len(Stream)
    assert Rng(0).child(3).stream == (0, 3)
    assert_array_equal(Rng(0).child(3).bits(8), Rng(0, (0, 3)).bits(8))


@pytest.mark.parametrize(
    ("seed", "stream"), [(1.5, 0), (True, 0), ("3", 0), (0, -1), (0, (1, -2))]
)
def test_invalid_rng(seed, stream):
    with raises(ParameterError):
        Rng(seed, stream)


def test_subset_is_sorted_and_distinct():
    sub = Rng(9).subset(100, 30)
    assert sub.size == 30
    assert np.all(np.diff(sub) > 0)
    assert sub.min() >= 0 and sub.max() < 100


def test_flip_rate():
    p, size = 0.1, 100_000
    rate = Rng(11).flips(size, p).mean()
    assert abs(rate - p) < 3 * np.sqrt(p * (1 - p) / size)


def test_characters_cover_all_codes():
    counts = np.bincount(Rng(2).characters(40_000), minlength=4)
    assert counts.size == 4
    assert np.all(np.abs(counts / 40_000 - 0.25) < 0.01)
