"""
Defines the (Gen, Sign, Ver) syntax of a one-time digital signature scheme."""

from typing import Any, Tuple

from qandysig.rng import Rng

__all__ = ["OneTimeScheme"]


class OneTimeScheme:
    """ Base class for one-time signature schemes over one-bit messages.

    A scheme is a triple of algorithms::

        gen(n, rng) -> (sk, vk)
        sign(sk, m) -> sigma
        ver(vk, m, sigma) -> ACC | REJ

    and is correct if ``ver(vk, m, sign(sk, m))`` accepts with probability 1 for
    every key pair produced by ``gen`` and every message ``m``. One-time means that
    ``sk`` signs at most one message."""

    def gen(self, n: int, rng: Rng) -> Tuple[Any, Any]:  # pragma: no cover
        """ Produces a fresh key pair ``(sk, vk)`` with security parameter ``n``."""
        raise NotImplementedError

    def sign(self, sk, m: int):  # pragma: no cover
        """ Signs the bit ``m``.

        Raises
        ------
        KeyAlreadyUsed
            ``sk`` has signed before."""
        raise NotImplementedError

    def ver(self, vk, m: int, sigma):  # pragma: no cover
        """ Returns ``Verdict.ACC`` iff ``sigma`` is a valid signature of ``m``."""
        raise NotImplementedError
