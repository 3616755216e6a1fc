"""
Reproducible random streams.

Every party, channel and trial draws from its own :class:`Rng`. An ``Rng`` is
identified by a 64-bit seed and a stream key; identical ``(seed, stream)`` pairs
yield identical draw sequences, and distinct streams are statistically independent
(they are distinct spawn keys of a ``numpy.random.SeedSequence`` driving a
counter-based Philox generator)."""

from enum import IntEnum
from numbers import Integral
from typing import Tuple, Union

import numpy as np

from qandysig.errors import ParameterError

__all__ = ["Rng", "Stream", "RNG_ALGORITHM"]

RNG_ALGORITHM = "numpy.Philox(SeedSequence(seed, spawn_key=stream))"

_SEED_MASK = (1 << 64) - 1


class Stream(IntEnum):
    """Well-known child streams of a trial's Rng."""

    ALICE = 1
    BOB = 2
    CHARLIE = 3
    CHANNEL_AB = 4
    CHANNEL_AC = 5
    CHANNEL_BC = 6
    CHANNEL_CB = 7
    PADS = 8
    QKD_AB = 9
    QKD_AC = 10
    QKD_BC = 11


StreamKey = Union[int, Tuple[int, ...]]


class Rng:
    """ A seeded, splittable random stream.

    Parameters
    ----------
    seed : int
        Reduced modulo 2**64.

    stream : Union[int, Tuple[int, ...]], optional (default=0)
        The stream identifier. Nested streams are created with :meth:`child`.

    Examples
    --------
    >>> from qandysig.rng import Rng
    >>> a = Rng(42).bits(8)
    >>> b = Rng(42).bits(8)
    >>> bool((a == b).all())
    True"""

    algorithm = RNG_ALGORITHM

    def __init__(self, seed: int, stream: StreamKey = 0):
        if isinstance(seed, bool) or not isinstance(seed, Integral):
            raise ParameterError(f"`seed` must be an integer, got {seed!r}")
        if isinstance(stream, Integral):
            stream = (int(stream),)
        stream = tuple(int(s) for s in stream)
        if any(s < 0 for s in stream):
            raise ParameterError(f"stream identifiers must be non-negative, got {stream}")

        self.seed = int(seed) & _SEED_MASK
        self.stream = stream
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def child(self, stream: int) -> "Rng":
        """Returns the independent sub-stream ``stream`` of this stream."""
        return Rng(self.seed, self.stream + (int(stream),))

    def bits(self, size: int) -> np.ndarray:
        """``size`` independent unbiased bits, as uint8."""
        return self.generator.integers(0, 2, size=size, dtype=np.uint8)

    def coin(self) -> int:
        return int(self.generator.integers(0, 2))

    def characters(self, size: int) -> np.ndarray:
        """``size`` codes drawn uniformly from the four qandy characters."""
        return self.generator.integers(0, 4, size=size, dtype=np.uint8)

    def subset(self, n: int, k: int) -> np.ndarray:
        """A uniformly-random, sorted subset of ``k`` distinct integers from ``range(n)``."""
        return np.sort(self.generator.choice(n, size=k, replace=False))

    def flips(self, size: int, p: float) -> np.ndarray:
        """``size`` i.i.d. Bernoulli(``p``) indicators, as a boolean array."""
        return self.generator.random(size) < p

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"
