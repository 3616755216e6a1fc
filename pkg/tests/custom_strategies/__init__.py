""" Custom hypothesis search strategies """
from fractions import Fraction
from numbers import Integral
from typing import Any, Tuple, Union

import hypothesis.extra.numpy as hnp
import hypothesis.strategies as st
import numpy as np

from qandysig.qandy import Basis, QandyChar

__all__ = [
    "bases",
    "basis_arrays",
    "bit_arrays",
    "char_arrays",
    "characters",
    "choices",
    "even_lengths",
    "everything_except",
    "thresholds",
]

characters = st.sampled_from(list(QandyChar))  # type: st.SearchStrategy[QandyChar]
bases = st.sampled_from(list(Basis))  # type: st.SearchStrategy[Basis]


def everything_except(
    excluded_types: Union[type, Tuple[type, ...]]
) -> st.SearchStrategy[Any]:
    """Returns hypothesis strategy that generates values of any type other than
    those specified in ``excluded_types``."""
    return (
        st.from_type(type)
        .flatmap(st.from_type)
        .filter(lambda x: not isinstance(x, excluded_types))
    )


def choices(seq, size, replace=True):
    """Randomly choose elements from `seq`, producing a tuple of length `size`.

    Examples from this strategy shrink towards `tuple(seq[:size])` when `replace=False.
    Examples from this strategy shrink towards `(seq[0], ) * size` when `replace=True.

    Parameters
    ----------
    seq : Sequence[Any]
    size : int
    replace : bool

    Returns
    -------
    hypothesis.strategiesSearchStrategy[Tuple[Any, ...]]
        A tuple of length `size` containing elements of `seq`"""
    if not isinstance(size, Integral) or size < 0:
        raise ValueError(f"`size` must be a non-negative integer. Got {size}")
    if size > len(seq) and not replace:
        raise ValueError(
            "`size` must not exceed the length of `seq` when `replace` is `False`"
        )
    if not seq:
        if size:
            raise ValueError("`size` must be 0, given an empty `seq`")
        return st.just(())
    return st.lists(
        st.sampled_from(range(len(seq))),
        min_size=size,
        max_size=size,
        unique=not replace,
    ).map(lambda x: tuple(seq[i] for i in x))


def even_lengths(min_value: int = 2, max_value: int = 64) -> st.SearchStrategy[int]:
    """ Hypothesis search strategy: even key lengths in ``[min_value, max_value]``."""
    if min_value < 2 or max_value < min_value:
        raise ValueError(
            f"need 2 <= min_value <= max_value, got min_value={min_value}, max_value={max_value}"
        )
    return st.integers((min_value + 1) // 2, max_value // 2).map(lambda k: 2 * k)


def _codes(high: int, size, **kwargs) -> st.SearchStrategy[np.ndarray]:
    if isinstance(size, Integral):
        size = st.just(int(size))
    return size.flatmap(
        lambda n: hnp.arrays(
            dtype=np.uint8, shape=(n,), elements=st.integers(0, high), **kwargs
        )
    )


def bit_arrays(size=st.integers(0, 64), **kwargs) -> st.SearchStrategy[np.ndarray]:
    """ Hypothesis search strategy: 1D uint8 arrays of zeros and ones.

    Parameters
    ----------
    size : Union[int, st.SearchStrategy[int]]"""
    return _codes(1, size, **kwargs)


def char_arrays(size=st.integers(0, 64), **kwargs) -> st.SearchStrategy[np.ndarray]:
    """ Hypothesis search strategy: 1D arrays of qandy character codes."""
    return _codes(3, size, **kwargs)


def basis_arrays(size=st.integers(0, 64), **kwargs) -> st.SearchStrategy[np.ndarray]:
    return _codes(1, size, **kwargs)


@st.composite
def thresholds(draw, max_p_f: Fraction = Fraction(1, 4)) -> Tuple[float, float, float, float]:
    """ Hypothesis search strategy: ``(p_e, s_a, s_v, p_f)`` with
    ``0 <= p_e < s_a < s_v < p_f <= max_p_f``.

    Values are drawn on a grid of 1/1000 so that the strict orderings survive
    conversion to float."""
    top = int(max_p_f * 1000)
    cuts = draw(st.lists(st.integers(1, top), min_size=3, max_size=3, unique=True))
    s_a, s_v, p_f = sorted(cuts)
    p_e = draw(st.integers(0, s_a - 1))
    return p_e / 1000, s_a / 1000, s_v / 1000, p_f / 1000
