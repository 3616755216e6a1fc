import hypothesis.strategies as st
import pytest
from hypothesis import given
from pytest import raises

from qandysig.errors import InvalidGap, ParameterError
from qandysig.harness.thresholds import gap_for, optimize_thresholds
from qandysig.protocol_base import check_thresholds


@pytest.mark.parametrize(
    ("p_e", "p_f", "expected"),
    [(0.0, 0.125, (1 / 24, 1 / 12)), (0.03, 0.12, (0.06, 0.09))],
)
def test_equal_gaps(p_e, p_f, expected):
    assert optimize_thresholds(p_e, p_f) == pytest.approx(expected)


def test_weighted_gaps():
    s_a, s_v = optimize_thresholds(0.0, 0.2, weights=(2, 1, 1))
    assert (s_a, s_v) == pytest.approx((0.1, 0.15))


@given(p_e=st.integers(0, 998), p_f=st.integers(1, 999))
def test_thresholds_are_ordered(p_e: int, p_f: int):
    p_e, p_f = p_e / 1000, p_f / 1000
    if p_e >= p_f:
        with raises(InvalidGap):
            optimize_thresholds(p_e, p_f)
        return
    s_a, s_v = optimize_thresholds(p_e, p_f)
    assert p_e < s_a < s_v < p_f
    assert s_a - p_e == pytest.approx(s_v - s_a)
    assert p_f - s_v == pytest.approx(s_v - s_a)


@pytest.mark.parametrize(
    "kwargs", [dict(weights=(1, 1)), dict(weights=(1, 0, 1)), dict(weights=(1, -1, 1))]
)
def test_invalid_weights(kwargs):
    with raises(ParameterError):
        optimize_thresholds(0.0, 0.1, **kwargs)


def test_invalid_gap_is_a_value_error():
    with raises(ValueError):
        optimize_thresholds(0.1, 0.1)


def test_optimized_thresholds_are_valid_for_p1():
    s_a, s_v = optimize_thresholds(0.0, 0.125)
    check_thresholds(0.0, s_a, s_v, 0.125)


@pytest.mark.parametrize(
    ("event", "expected"),
    [
        ("forge_succ", 0.04),
        ("repud_succ", 0.05),
        ("repud_fail", 0.05),
        ("honest_abort", 0.03),
        ("honest_acc", 0.03),
    ],
)
def test_gap_for(event, expected):
    assert gap_for(event, p_e=0.02, s_a=0.05, s_v=0.1, p_f=0.14) == pytest.approx(expected)


def test_gap_for_unknown_event():
    with raises(ValueError):
        gap_for("success", p_e=0.0, s_a=0.05, s_v=0.1, p_f=0.14)
