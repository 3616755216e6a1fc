"""
Simulated transport between the three parties.

Three kinds of links are provided:

- :class:`QandyChannel`: carries qandies and flips each one's value (within its
  basis) independently with probability ``p_channel``.
- :class:`AuthChannel`: a perfect authenticated classical channel. It delivers
  messages verbatim, logs them to a :class:`Transcript` and charges a tag cost
  for every message.
- :class:`PadStore`: one-time pads shared by pairs of parties. Pad bits are
  read strictly once; reading past the end of a pad raises :class:`PadExhausted`.
"""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, TextIO, Tuple

import numpy as np

from qandysig._utils import as_bits, check_fraction, to_payload_bytes
from qandysig.errors import PadExhausted, ParameterError
from qandysig.qandy import Qandy, QandyString
from qandysig.rng import Rng

__all__ = [
    "Party",
    "Message",
    "Transcript",
    "QandyChannel",
    "AuthChannel",
    "PadStore",
    "send_qandy",
    "auth_send",
    "otp_send",
]

logger = logging.getLogger(__name__)


class Party(str, Enum):
    ALICE = "alice"
    BOB = "bob"
    CHARLIE = "charlie"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Message:
    """One logged transmission."""

    trial: int
    step: str
    sender: Party
    receiver: Party
    kind: str
    payload: bytes

    def to_record(self) -> Dict[str, Any]:
        return {
            "trial": self.trial,
            "step": self.step,
            "from": str(self.sender),
            "to": str(self.receiver),
            "kind": self.kind,
            "payload_hex": self.payload.hex(),
        }


class Transcript:
    """ Append-only log of every transmission of one trial.

    Parameters
    ----------
    trial : int, optional (default=0)
        Stamped onto every record."""

    def __init__(self, trial: int = 0):
        self.trial = trial
        self._messages = []  # type: List[Message]

    def log(
        self, sender: Party, receiver: Party, kind: str, payload: Any, *, step: str
    ) -> Message:
        message = Message(
            self.trial,
            step,
            Party(sender),
            Party(receiver),
            kind,
            to_payload_bytes(payload),
        )
        self._messages.append(message)
        return message

    def __len__(self) -> int:
        return len(self._messages)

    def __iter__(self):
        return iter(self._messages)

    def messages(self, step: Optional[str] = None, kind: Optional[str] = None) -> List[Message]:
        """ The logged messages in send order, optionally filtered by step tag and kind."""
        return [
            m
            for m in self._messages
            if (step is None or m.step == step) and (kind is None or m.kind == kind)
        ]

    def records(self) -> List[Dict[str, Any]]:
        return [m.to_record() for m in self._messages]

    def to_jsonl(self) -> str:
        """ Renders the transcript as JSON-lines, one ``{trial, step, from, to, kind, payload_hex}``
        object per message."""
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def write(self, fp: TextIO):
        fp.write(self.to_jsonl())


class QandyChannel:
    """ A noisy qandy channel from ``sender`` to ``receiver``.

    Every transmitted qandy is consumed and re-emitted under a fresh handle. With
    probability ``p_channel`` its value bit is flipped (R<->G, C<->V); its basis is
    never changed.

    Parameters
    ----------
    p_channel : float
        Per-qandy flip probability, in [0, 0.5).

    rng : Rng
        The channel's private noise stream.

    sender : Party, optional

    receiver : Party, optional

    transcript : Optional[Transcript]
        If given, each transmission is logged with the key indices it carried."""

    def __init__(
        self,
        p_channel: float,
        rng: Rng,
        *,
        sender: Party = Party.ALICE,
        receiver: Party = Party.BOB,
        transcript: Optional[Transcript] = None,
    ):
        self.p_channel = check_fraction(p_channel, "p_channel", high=0.5, high_open=True)
        self.rng = rng
        self.sender = Party(sender)
        self.receiver = Party(receiver)
        self.transcript = transcript
        self.sent = 0
        self.flipped = 0

    def send_string(self, qandies: QandyString, *, step: str = "qandy") -> QandyString:
        """ Transmits a string of qandies, consuming it.

        Returns
        -------
        QandyString
            The received string, with new uids, the same key indices, and noise applied.

        Raises
        ------
        AlreadyConsumed"""
        chars, indices, _ = qandies._release()
        flips = self.rng.flips(chars.size, self.p_channel)
        self.sent += chars.size
        self.flipped += int(np.count_nonzero(flips))
        if self.transcript is not None:
            self.transcript.log(self.sender, self.receiver, "qandy", indices, step=step)
        return QandyString(chars ^ flips.astype(np.uint8), indices)

    def send(self, q: Qandy, *, step: str = "qandy") -> Qandy:
        """The single-qandy form of :meth:`send_string`."""
        char = q._take_char()
        self.sent += 1
        if self.rng.flips(1, self.p_channel)[0]:
            self.flipped += 1
            char = char.flipped
        if self.transcript is not None:
            self.transcript.log(
                self.sender, self.receiver, "qandy", np.array([q.index]), step=step
            )
        return Qandy(char, index=q.index)


def send_qandy(ch: QandyChannel, q: Qandy) -> Qandy:
    """ Moves ``q`` across ``ch``; see :meth:`QandyChannel.send`."""
    return ch.send(q)


class AuthChannel:
    """ A perfect authenticated classical channel between two parties.

    Messages are delivered unmodified and in order. Each message costs ``tag_length``
    bits of shared secret key; the cost is only accounted for (or drawn from
    ``pads`` when given), tags are never computed or checked.

    Parameters
    ----------
    sender : Party

    receiver : Party

    transcript : Transcript

    tag_length : int, optional (default=64)

    pads : Optional[PadStore]
        If given, every tag consumes ``tag_length`` bits of the pair's pad."""

    def __init__(
        self,
        sender: Party,
        receiver: Party,
        transcript: Transcript,
        *,
        tag_length: int = 64,
        pads: Optional["PadStore"] = None,
    ):
        if tag_length < 0:
            raise ParameterError(f"`tag_length` must be non-negative, got {tag_length}")
        self.sender = Party(sender)
        self.receiver = Party(receiver)
        self.transcript = transcript
        self.tag_length = int(tag_length)
        self.pads = pads
        self.auth_cost = 0

    def send(self, msg: Any, *, step: str, kind: str = "auth") -> Any:
        """ Delivers ``msg`` verbatim and logs it under ``step``.

        Raises
        ------
        PadExhausted
            The tag cost cannot be drawn from ``pads``."""
        if self.pads is not None:
            self.pads.reserve(self.sender, self.receiver, self.tag_length)
        self.auth_cost += self.tag_length
        self.transcript.log(self.sender, self.receiver, kind, msg, step=step)
        return msg

    def messages(self, step: Optional[str] = None) -> List[Message]:
        """The messages this channel carried, in send order."""
        return [
            m
            for m in self.transcript.messages(step)
            if m.sender == self.sender and m.receiver == self.receiver
        ]


def auth_send(ch: AuthChannel, msg: Any, *, step: str, kind: str = "auth") -> Any:
    return ch.send(msg, step=step, kind=kind)


def _pair(a: Party, b: Party) -> FrozenSet[Party]:
    a, b = Party(a), Party(b)
    if a == b:
        raise ParameterError(f"a pad is shared by two distinct parties, got {a} twice")
    return frozenset((a, b))


class _Pad:
    __slots__ = ("copies", "cursor", "segments")

    def __init__(self, copies: Dict[Party, np.ndarray]):
        self.copies = copies
        self.cursor = 0
        self.segments = []  # type: List[Tuple[int, int]]

    def __len__(self) -> int:
        return next(iter(self.copies.values())).size


class PadStore:
    """ One-time pads shared by pairs of parties.

    Each pair owns a single pad; each party of the pair holds its own copy, so keys
    that came out of a noisy, uncorrected key distribution may be installed as pads
    too. A cursor per pad marks the first unused bit and only ever moves forward.

    Parameters
    ----------
    transcript : Optional[Transcript]
        Where ciphertexts sent via :meth:`send` are logged."""

    def __init__(self, transcript: Optional[Transcript] = None):
        self.transcript = transcript
        self._pads = {}  # type: Dict[FrozenSet[Party], _Pad]

    def install(self, a: Party, b: Party, pad, pad_b=None):
        """ Installs the pad of the pair ``(a, b)``.

        Parameters
        ----------
        a, b : Party

        pad : array_like
            ``a``'s copy of the pad bits.

        pad_b : Optional[array_like]
            ``b``'s copy; defaults to ``pad``."""
        key = _pair(a, b)
        pad = as_bits(pad).copy()
        pad_b = pad if pad_b is None else as_bits(pad_b).copy()
        if pad.size != pad_b.size:
            raise ParameterError("both copies of a pad must have the same length")
        self._pads[key] = _Pad({Party(a): pad, Party(b): pad_b})

    def _get(self, a: Party, b: Party) -> _Pad:
        key = _pair(a, b)
        try:
            return self._pads[key]
        except KeyError:
            raise ParameterError(f"no pad is installed for the pair ({a}, {b})")

    def length(self, a: Party, b: Party) -> int:
        return len(self._get(a, b))

    def remaining(self, a: Party, b: Party) -> int:
        pad = self._get(a, b)
        return len(pad) - pad.cursor

    def consumed(self, a: Party, b: Party) -> int:
        return self._get(a, b).cursor

    def consumed_offsets(self, a: Party, b: Party) -> np.ndarray:
        """Every pad offset read so far, in the order it was read."""
        segments = self._get(a, b).segments
        if not segments:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(lo, hi, dtype=np.int64) for lo, hi in segments])

    def _take(self, a: Party, b: Party, size: int) -> Tuple[_Pad, slice]:
        pad = self._get(a, b)
        if size < 0:
            raise ParameterError(f"cannot read a negative number of pad bits ({size})")
        if pad.cursor + size > len(pad):
            raise PadExhausted(
                f"the ({a}, {b}) pad holds {len(pad) - pad.cursor} unused bits, "
                f"{size} were requested"
            )
        segment = slice(pad.cursor, pad.cursor + size)
        pad.segments.append((segment.start, segment.stop))
        pad.cursor = segment.stop
        return pad, segment

    def reserve(self, a: Party, b: Party, size: int) -> np.ndarray:
        """ Consumes ``size`` pad bits without sending anything and returns ``a``'s copy.

        Raises
        ------
        PadExhausted"""
        pad, segment = self._take(a, b, size)
        return pad.copies[Party(a)][segment].copy()

    def send(self, msg, sender: Party, receiver: Party, *, step: str) -> np.ndarray:
        """ One-time-pad encrypts ``msg`` from ``sender`` to ``receiver``.

        Only the ciphertext is logged.

        Parameters
        ----------
        msg : array_like
            Bits to send.

        sender : Party

        receiver : Party

        step : str
            Transcript tag.

        Returns
        -------
        numpy.ndarray
            The plaintext as decrypted by ``receiver``.

        Raises
        ------
        PadExhausted"""
        msg = as_bits(msg)
        pad, segment = self._take(sender, receiver, msg.size)
        ciphertext = msg ^ pad.copies[Party(sender)][segment]
        if self.transcript is not None:
            self.transcript.log(sender, receiver, "otp", ciphertext, step=step)
        return ciphertext ^ pad.copies[Party(receiver)][segment]

    def pairs(self) -> Iterable[FrozenSet[Party]]:
        return tuple(self._pads)


def otp_send(
    pads: PadStore, msg, sender: Party, receiver: Party, *, step: str = "otp"
) -> np.ndarray:
    """ Sends ``msg`` over the pad shared by ``sender`` and ``receiver``; see
    :meth:`PadStore.send`."""
    return pads.send(msg, sender, receiver, step=step)
