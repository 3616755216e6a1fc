import math
from numbers import Real

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from numpy.testing import assert_array_equal
from pytest import raises

from qandysig._utils import (
    as_bits,
    binary_entropy,
    bits_to_hex,
    check_even,
    check_fraction,
    hoeffding_delta,
    to_payload_bytes,
)
from qandysig.errors import ParameterError
from tests.custom_strategies import bit_arrays, everything_except


@given(value=everything_except(Real))
def test_check_fraction_rejects_non_reals(value):
    with raises(ParameterError):
        check_fraction(value, "x")


@pytest.mark.parametrize(
    ("value", "kwargs", "ok"),
    [
        (0.0, {}, True),
        (1.0, {}, True),
        (0.0, dict(low_open=True), False),
        (1.0, dict(high_open=True), False),
        (0.25, dict(high=0.25, high_open=True), False),
        (0.2499, dict(high=0.25, high_open=True), True),
        (-0.1, {}, False),
        (float("nan"), {}, False),
        (True, {}, False),
    ],
)
def test_check_fraction(value, kwargs, ok):
    if ok:
        assert check_fraction(value, "x", **kwargs) == value
    else:
        with raises(ParameterError, match="`x`"):
            check_fraction(value, "x", **kwargs)


@pytest.mark.parametrize("value", [1, 3, 0, -2, 2.0, "4"])
def test_check_even_rejects(value):
    with raises(ParameterError):
        check_even(value, "n")


def test_parameter_error_is_a_value_error():
    with raises(ValueError):
        check_even(3, "n")


@given(bits=bit_arrays())
def test_bits_to_hex_packs_big_endian(bits: np.ndarray):
    packed = bytes.fromhex(bits_to_hex(bits))
    assert len(packed) == math.ceil(bits.size / 8)
    assert_array_equal(np.unpackbits(np.frombuffer(packed, np.uint8))[: bits.size], bits)


def test_as_bits_rejects_non_bits():
    with raises(ParameterError):
        as_bits([0, 1, 2])


def test_to_payload_bytes():
    assert to_payload_bytes("SIGN b=1") == b"SIGN b=1"
    assert to_payload_bytes(np.array([1, 0, 1, 1], dtype=np.uint8)) == bytes([0b10110000])
    assert to_payload_bytes(b"\x01") == b"\x01"


@pytest.mark.parametrize(
    ("p", "expected"), [(0.0, 0.0), (1.0, 0.0), (0.5, 1.0), (0.11, 0.499916)]
)
def test_binary_entropy(p, expected):
    assert binary_entropy(p) == pytest.approx(expected, abs=1e-6)


@given(p=st.floats(0.001, 0.999))
def test_binary_entropy_is_symmetric(p):
    assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p))


def test_hoeffding_delta():
    assert hoeffding_delta(200, 0.05) == pytest.approx(math.sqrt(math.log(20) / 400))
    with raises(ParameterError):
        hoeffding_delta(0, 0.05)
