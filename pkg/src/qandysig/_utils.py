import math
from numbers import Integral, Real
from typing import Any, Iterable

import numpy as np

from qandysig.errors import ParameterError

__all__ = [
    "as_bits",
    "binary_entropy",
    "bits_to_hex",
    "check_even",
    "check_fraction",
    "hoeffding_delta",
    "to_payload_bytes",
]


def check_fraction(
    value: Any, name: str, *, low=0.0, high=1.0, low_open=False, high_open=False
) -> float:
    """ Ensures that ``value`` is a real number within the specified interval.

    Parameters
    ----------
    value : Any

    name : str
        The parameter name, used in the error message.

    low : float, optional (default=0.0)

    high : float, optional (default=1.0)

    low_open : bool, optional (default=False)
        If ``True``, ``value == low`` is rejected.

    high_open : bool, optional (default=False)
        If ``True``, ``value == high`` is rejected.

    Returns
    -------
    float

    Raises
    ------
    ParameterError"""
    if isinstance(value, bool) or not isinstance(value, Real) or math.isnan(value):
        raise ParameterError(f"`{name}` must be a real number, got {value!r}")

    too_low = value <= low if low_open else value < low
    too_high = value >= high if high_open else value > high
    if too_low or too_high:
        left = "(" if low_open else "["
        right = ")" if high_open else "]"
        raise ParameterError(
            f"`{name}` must lie in {left}{low}, {high}{right}, got {value}"
        )
    return float(value)


def check_even(value: Any, name: str, *, minimum: int = 2) -> int:
    """ Ensures that ``value`` is an even integer that is at least ``minimum``.

    Raises
    ------
    ParameterError"""
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ParameterError(f"`{name}` must be an integer, got {value!r}")
    if value < minimum or value % 2:
        raise ParameterError(
            f"`{name}` must be an even integer no smaller than {minimum}, got {value}"
        )
    return int(value)


def as_bits(x: Iterable[int]) -> np.ndarray:
    """ Returns ``x`` as a 1D uint8 array of zeros and ones.

    Raises
    ------
    ParameterError
        ``x`` contains values other than 0 and 1"""
    bits = np.asarray(x, dtype=np.uint8).reshape(-1)
    if bits.size and bits.max() > 1:
        raise ParameterError("bit strings may only contain the values 0 and 1")
    return bits


def bits_to_hex(bits: np.ndarray) -> str:
    """ Packs a bit array (big-endian within each byte, zero-padded) into a hex string."""
    return np.packbits(as_bits(bits)).tobytes().hex()


def to_payload_bytes(payload: Any) -> bytes:
    """ Renders a classical message as bytes for transcript logging.

    Strings are UTF-8 encoded, bit arrays are packed, and anything else is
    rendered through its ``repr``."""
    if isinstance(payload, bytes):
        return payload
    if isinstance(payload, str):
        return payload.encode("utf-8")
    if isinstance(payload, np.ndarray):
        if payload.dtype == np.uint8 and (payload.size == 0 or payload.max() <= 1):
            return np.packbits(payload.reshape(-1)).tobytes()
        return payload.astype(np.int64).tobytes()
    return repr(payload).encode("utf-8")


def binary_entropy(p: float) -> float:
    """ ``h2(p) = -p log2(p) - (1 - p) log2(1 - p)``, with ``h2(0) = h2(1) = 0``."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def hoeffding_delta(t: int, eps_delta: float) -> float:
    """ The one-sided Hoeffding deviation ``sqrt(ln(1 / eps_delta) / (2 t))``.

    An i.i.d. sample of ``t`` Bernoulli indicators overestimates its mean by more
    than this amount with probability at most ``eps_delta``."""
    if t <= 0:
        raise ParameterError(f"`t` must be positive, got {t}")
    return math.sqrt(math.log(1.0 / eps_delta) / (2.0 * t))
