"""
Qandy key distribution.

A session runs prepare, measure, sift and TEST. In ``full`` mode the sifted keys
then go through error correction (EC) and privacy amplification (PA) and come out
identical; in ``test-only`` mode the post-TEST sifted keys are returned as they are,
correlated but noisy.

EC is simulated: the receiver's key is corrected by the referee and the session is
charged ``ceil(f_ec * n_sift * h2(qber))`` leaked bits. PA is a seeded binary
Toeplitz hash."""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from qandysig._utils import binary_entropy, check_fraction, hoeffding_delta
from qandysig.channels import AuthChannel, Party, QandyChannel, Transcript
from qandysig.errors import InsufficientSample, KeyTooShort, ParameterError, QkdAbort
from qandysig.qandy import QandyString
from qandysig.rng import Rng

__all__ = [
    "QkdMode",
    "QkdConfig",
    "RawKeys",
    "QkdResult",
    "qkd_exchange",
    "qkd_ec",
    "qkd_pa",
    "qkd_session",
    "toeplitz_hash",
    "suggest_n_sent",
    "qandies_per_key_bit",
]

logger = logging.getLogger(__name__)

# child streams of a session's Rng
_SENDER, _RECEIVER = 1, 2


class QkdMode(str, Enum):
    FULL = "full"
    TEST_ONLY = "test-only"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class QkdConfig:
    """ Configuration of one key distribution session.

    Parameters
    ----------
    n_sent : Optional[int]
        Qandies transmitted. ``None`` sizes the session from the key length it must
        deliver (see :func:`suggest_n_sent`).

    mode : QkdMode, optional (default=QkdMode.FULL)

    test_fraction : float, optional (default=0.2)
        Fraction of the sifted bits revealed in the TEST.

    eps_delta : float, optional (default=0.05)
        Confidence of the reported Hoeffding deviation.

    eps_pa : float, optional (default=2**-32)
        Privacy amplification failure budget; PA sacrifices
        ``ceil(2 log2(1 / eps_pa))`` bits.

    abort_threshold : float, optional (default=0.11)
        The session aborts iff the TEST estimates a higher error rate.

    f_ec : float, optional (default=1.2)
        Error correction inefficiency.

    sender : Party, optional (default=Party.ALICE)

    receiver : Party, optional (default=Party.BOB)"""

    n_sent: Optional[int] = None
    mode: QkdMode = QkdMode.FULL
    test_fraction: float = 0.2
    eps_delta: float = 0.05
    eps_pa: float = 2.0 ** -32
    abort_threshold: float = 0.11
    f_ec: float = 1.2
    sender: Party = Party.ALICE
    receiver: Party = Party.BOB

    def __post_init__(self):
        object.__setattr__(self, "mode", QkdMode(self.mode))
        object.__setattr__(self, "sender", Party(self.sender))
        object.__setattr__(self, "receiver", Party(self.receiver))
        if self.n_sent is not None and self.n_sent < 2:
            raise ParameterError(f"`n_sent` must be at least 2, got {self.n_sent}")
        if self.sender is self.receiver:
            raise ParameterError(f"a session needs two distinct parties, got {self.sender} twice")
        check_fraction(self.test_fraction, "test_fraction", low_open=True, high_open=True)
        check_fraction(self.eps_delta, "eps_delta", low_open=True, high_open=True)
        check_fraction(self.eps_pa, "eps_pa", low_open=True, high_open=True)
        check_fraction(self.abort_threshold, "abort_threshold", high=0.5)
        if self.f_ec < 1:
            raise ParameterError(f"`f_ec` must be at least 1, got {self.f_ec}")

    @property
    def pa_cost(self) -> int:
        return math.ceil(round(2 * math.log2(1 / self.eps_pa), 9))

    def between(self, sender: Party, receiver: Party) -> "QkdConfig":
        return replace(self, sender=sender, receiver=receiver)


@dataclass(frozen=True, eq=False)
class RawKeys:
    """ The sifted keys left after the TEST, with its statistics."""

    sender: np.ndarray
    receiver: np.ndarray
    n_sent: int
    sifted: int
    revealed: int
    qber: float
    delta: float


@dataclass(frozen=True, eq=False)
class QkdResult:
    mode: QkdMode
    key_sender: np.ndarray
    key_receiver: np.ndarray
    n_sent: int
    sifted: int
    revealed: int
    qber: float
    delta: float
    leaked: int
    sender: Party = Party.ALICE
    receiver: Party = Party.BOB

    @property
    def final_length(self) -> int:
        return self.key_sender.size

    def summary(self) -> Dict[str, Any]:
        return dict(
            pair=f"{self.sender}-{self.receiver}",
            mode=str(self.mode),
            n_sent=self.n_sent,
            sifted=self.sifted,
            qber=self.qber,
            leaked=self.leaked,
            final_length=self.final_length,
            aborted=False,
        )


def qkd_exchange(
    config: QkdConfig,
    channel: QandyChannel,
    rng: Rng,
    transcript: Optional[Transcript] = None,
) -> RawKeys:
    """ Prepare, measure, sift and TEST.

    The sender prepares ``n_sent`` uniformly random characters and the receiver
    measures each arriving qandy in a uniformly random basis. The receiver announces
    its bases and the sender the positions where they match; the bit at a matching
    position is the value of the prepared character. ``round(test_fraction * n_sift)``
    sifted positions are then revealed and compared.

    Parameters
    ----------
    config : QkdConfig
        ``n_sent`` must be set.

    channel : QandyChannel

    rng : Rng
        The session's stream.

    transcript : Optional[Transcript]

    Returns
    -------
    RawKeys

    Raises
    ------
    QkdAbort
        The estimated error rate exceeds ``config.abort_threshold``.

    InsufficientSample
        No sifted bit is left to test."""
    if config.n_sent is None:
        raise ParameterError("`n_sent` must be set before a session can run")
    transcript = Transcript() if transcript is None else transcript
    sender, receiver = rng.child(_SENDER), rng.child(_RECEIVER)
    to_sender = AuthChannel(config.receiver, config.sender, transcript)
    to_receiver = AuthChannel(config.sender, config.receiver, transcript)

    chars = sender.characters(config.n_sent)
    arrived = channel.send_string(QandyString.prepare(chars), step="qkd")
    bases = receiver.bits(config.n_sent)
    records = arrived.measure(bases, receiver)

    to_sender.send(bases, step="qkd-sift", kind="bases")
    sift = (chars >> 1) == bases
    to_receiver.send(sift.astype(np.uint8), step="qkd-sift", kind="sift")
    key_sender = (chars[sift] & 1).astype(np.uint8)
    key_receiver = records.outcome[sift]

    n_sift = key_sender.size
    k = int(round(config.test_fraction * n_sift))
    if k == 0:
        raise InsufficientSample(f"no sifted bits to test out of {config.n_sent} qandies sent")
    tested = sender.subset(n_sift, k)
    to_receiver.send(np.concatenate([tested, key_sender[tested]]), step="qkd-test", kind="reveal")
    to_sender.send(key_receiver[tested], step="qkd-test", kind="reveal")

    qber = int(np.count_nonzero(key_sender[tested] != key_receiver[tested])) / k
    delta = hoeffding_delta(k, config.eps_delta)
    logger.debug(
        "qkd %s-%s: sent=%d sifted=%d tested=%d qber=%.4f",
        config.sender,
        config.receiver,
        config.n_sent,
        n_sift,
        k,
        qber,
    )
    if qber > config.abort_threshold:
        raise QkdAbort(qber, config.abort_threshold)

    keep = np.ones(n_sift, dtype=bool)
    keep[tested] = False
    return RawKeys(
        key_sender[keep], key_receiver[keep], config.n_sent, n_sift, k, qber, delta
    )


def qkd_ec(raw: RawKeys, f_ec: float = 1.2) -> Tuple[np.ndarray, np.ndarray, int]:
    """ Error correction with leakage accounting.

    Returns
    -------
    Tuple[numpy.ndarray, numpy.ndarray, int]
        The sender's and the corrected receiver's keys (equal), and
        ``leaked = ceil(f_ec * n_sift * h2(qber))``.

    Examples
    --------
    >>> import numpy as np
    >>> raw = RawKeys(np.zeros(4, np.uint8), np.ones(4, np.uint8), 10, 5, 1, 0.0, 0.5)
    >>> qkd_ec(raw)[2]
    0"""
    leaked = math.ceil(round(f_ec * raw.sifted * binary_entropy(raw.qber), 9))
    return raw.sender.copy(), raw.sender.copy(), int(leaked)


def toeplitz_hash(key, seed, m: int) -> np.ndarray:
    """ Multiplies ``key`` by the binary ``m x len(key)`` Toeplitz matrix defined by
    ``seed``, over GF(2).

    Entry ``(i, j)`` of the matrix is ``seed[i - j + len(key) - 1]``.

    Parameters
    ----------
    key : array_like, shape-(N,)

    seed : array_like, shape-(N + m - 1,)

    m : int

    Returns
    -------
    numpy.ndarray, shape-(m,)"""
    key = np.asarray(key, dtype=np.int64)
    seed = np.asarray(seed, dtype=np.int64)
    n_in = key.size
    if seed.size != n_in + m - 1:
        raise ParameterError(
            f"a Toeplitz seed for {n_in} -> {m} bits has {n_in + m - 1} bits, got {seed.size}"
        )
    return (np.convolve(seed, key)[n_in - 1 : n_in - 1 + m] % 2).astype(np.uint8)


def qkd_pa(
    key_sender,
    key_receiver,
    leaked: int,
    config: QkdConfig,
    rng: Rng,
    transcript: Optional[Transcript] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """ Privacy amplification.

    The sender draws a Toeplitz seed and announces it; both sides hash their key to
    ``len(key) - leaked - ceil(2 log2(1 / eps_pa))`` bits.

    Raises
    ------
    KeyTooShort
        No bits would survive."""
    key_sender = np.asarray(key_sender, dtype=np.uint8)
    m = key_sender.size - leaked - config.pa_cost
    if m <= 0:
        raise KeyTooShort(
            f"privacy amplification leaves {m} bits of a {key_sender.size}-bit key "
            f"({leaked} leaked, {config.pa_cost} sacrificed)"
        )
    seed = rng.bits(key_sender.size + m - 1)
    if transcript is not None:
        AuthChannel(config.sender, config.receiver, transcript).send(
            seed, step="qkd-pa", kind="seed"
        )
    return toeplitz_hash(key_sender, seed, m), toeplitz_hash(key_receiver, seed, m)


def qkd_session(
    config: QkdConfig,
    channel: QandyChannel,
    rng: Rng,
    transcript: Optional[Transcript] = None,
    *,
    required: Optional[int] = None,
) -> QkdResult:
    """ Runs a complete session.

    Parameters
    ----------
    config : QkdConfig

    channel : QandyChannel

    rng : Rng

    transcript : Optional[Transcript]

    required : Optional[int]
        The key length the caller needs. Sizes the session when ``config.n_sent``
        is ``None``, using the channel's nominal noise as the expected error rate.

    Returns
    -------
    QkdResult

    Raises
    ------
    QkdAbort, InsufficientSample, KeyTooShort"""
    if config.n_sent is None:
        if required is None:
            raise ParameterError("either `n_sent` or the required key length must be given")
        config = replace(config, n_sent=suggest_n_sent(required, config, qber=channel.p_channel))

    raw = qkd_exchange(config, channel, rng, transcript)
    if config.mode is QkdMode.FULL:
        key_sender, key_receiver, leaked = qkd_ec(raw, config.f_ec)
        key_sender, key_receiver = qkd_pa(
            key_sender, key_receiver, leaked, config, rng.child(_SENDER).child(0), transcript
        )
    else:
        key_sender, key_receiver, leaked = raw.sender, raw.receiver, 0

    result = QkdResult(
        config.mode,
        key_sender,
        key_receiver,
        raw.n_sent,
        raw.sifted,
        raw.revealed,
        raw.qber,
        raw.delta,
        leaked,
        config.sender,
        config.receiver,
    )
    logger.info(
        "qkd %s-%s (%s): %d qandies -> %d key bits, qber %.4f",
        config.sender,
        config.receiver,
        config.mode,
        result.n_sent,
        result.final_length,
        result.qber,
    )
    if required is not None and result.final_length < required:
        raise KeyTooShort(
            f"the {config.sender}-{config.receiver} session delivered "
            f"{result.final_length} key bits, {required} are needed"
        )
    return result


def suggest_n_sent(required: int, config: QkdConfig, *, qber: float = 0.0) -> int:
    """ The number of qandies to send so that a session very likely delivers
    ``required`` key bits.

    The sifted length is found by fixed-point iteration, budgeting error correction
    at a pessimistic error rate four standard errors above ``qber``; the qandies
    sent then cover that sifted length with a four-sigma margin on the sift rate.

    Parameters
    ----------
    required : int

    config : QkdConfig

    qber : float, optional (default=0.0)
        The expected error rate.

    Returns
    -------
    int

    Raises
    ------
    KeyTooShort
        Error correction at this error rate would consume every bit.

    Examples
    --------
    >>> suggest_n_sent(100, QkdConfig(mode="test-only"))
    322"""
    if required < 1:
        raise ParameterError(f"`required` must be positive, got {required}")
    check_fraction(qber, "qber", high=0.5)
    tf = config.test_fraction

    n_sift = required
    for _ in range(100):
        if config.mode is QkdMode.FULL:
            sigma = math.sqrt(qber * (1 - qber) / max(tf * n_sift, 1))
            pessimistic = min(qber + 4 * sigma, 0.5)
            rate = 1 - tf - config.f_ec * binary_entropy(pessimistic)
            if rate <= 0:
                raise KeyTooShort(
                    f"error correction at an error rate of {pessimistic:.4f} leaves no key"
                )
            new = math.ceil((required + config.pa_cost) / rate)
        else:
            new = math.ceil(required / (1 - tf))
        if new == n_sift:
            break
        n_sift = new
    # n/2 - 2 sqrt(n) >= n_sift
    return int(math.ceil((2 + math.sqrt(4 + 2 * n_sift)) ** 2))


def qandies_per_key_bit(result: QkdResult) -> float:
    """ Qandies transmitted per final key bit."""
    if result.final_length == 0:
        return math.inf
    return result.n_sent / result.final_length
