"""
The qandy physical model.

A qandy carries exactly one property: a colour (R or G) or a taste (C or V).
Looking at a colour qandy or tasting a taste qandy reveals its value; measuring
the other property yields an unbiased coin flip. A qandy is destroyed by
measurement, and the simulator enforces no-cloning through consume-on-use
handles: the hidden character is never readable through the public API.

Characters are encoded as 2-bit codes ``2 * basis + value``::

    R -> 0 (colour, 0)    G -> 1 (colour, 1)
    C -> 2 (taste, 0)     V -> 3 (taste, 1)
"""

import threading
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from qandysig.errors import AlreadyConsumed, NoCloning, ParameterError
from qandysig.rng import Rng

__all__ = [
    "Basis",
    "QandyChar",
    "Qandy",
    "QandyString",
    "MeasurementRecord",
    "MeasurementRecords",
    "Provenance",
    "prepare",
    "measure",
    "random_char",
    "mismatch",
    "mismatch_mask",
    "count_mismatches",
    "eliminated_characters",
    "hidden_state_audit",
    "referee_view",
]


class Basis(IntEnum):
    COLOR = 0
    TASTE = 1

    @property
    def conjugate(self) -> "Basis":
        return Basis(1 - self)


class QandyChar(IntEnum):
    R = 0
    G = 1
    C = 2
    V = 3

    @property
    def basis(self) -> Basis:
        return Basis(self >> 1)

    @property
    def bit(self) -> int:
        """The value this character encodes within its basis."""
        return int(self) & 1

    @property
    def flipped(self) -> "QandyChar":
        """The other character of the same basis (R<->G, C<->V)."""
        return QandyChar(int(self) ^ 1)

    @classmethod
    def from_measurement(cls, basis: Basis, outcome: int) -> "QandyChar":
        return cls(2 * int(basis) + int(outcome))


class Provenance(IntEnum):
    """Where a recipient's copy of a public-key qandy came from."""

    KEPT = 0
    RECEIVED = 1
    FORWARDED_AWAY = 2


class _UidSource:
    def __init__(self):
        self._lock = threading.Lock()
        self._next = 0

    def take(self, size: int) -> np.ndarray:
        with self._lock:
            start = self._next
            self._next += size
        return np.arange(start, start + size, dtype=np.int64)


_UIDS = _UidSource()

_hidden_reads = ContextVar("hidden_reads", default=None)  # type: ContextVar[Optional[List[str]]]


@contextmanager
def hidden_state_audit():
    """ Records every referee read of hidden qandy state made within the context.

    Yields
    ------
    List[str]
        Filled with one entry per call of :func:`referee_view`. Protocol and
        adversary code never read hidden state, so a trial is clean iff this list
        is empty on exit."""
    reads = []  # type: List[str]
    token = _hidden_reads.set(reads)
    try:
        yield reads
    finally:
        _hidden_reads.reset(token)


def referee_view(qandies: Union["Qandy", "QandyString"]):
    """ Reads the hidden character(s) without consuming them.

    This is the trusted referee's window into the simulation, used for statistics
    and tests only. Reads are logged to any active :func:`hidden_state_audit`.

    Returns
    -------
    Union[QandyChar, numpy.ndarray]"""
    reads = _hidden_reads.get()
    if reads is not None:
        reads.append(type(qandies).__name__)
    if isinstance(qandies, Qandy):
        qandies._check_live()
        return qandies._char
    qandies._check_live()
    return qandies._chars.copy()


class _Unclonable:
    __slots__ = ()

    def __copy__(self):
        raise NoCloning(f"{type(self).__name__} handles cannot be copied")

    def __deepcopy__(self, memo):
        raise NoCloning(f"{type(self).__name__} handles cannot be copied")

    def __reduce_ex__(self, protocol):
        raise NoCloning(f"{type(self).__name__} handles cannot be serialized")


class Qandy(_Unclonable):
    """ A single-owner handle around one hidden qandy character.

    Use :func:`prepare` to create one and :func:`measure` to consume it."""

    __slots__ = ("_char", "_uid", "_consumed", "index")

    def __init__(self, char: QandyChar, *, index: int = 0, _uid: Optional[int] = None):
        self._char = QandyChar(char)  # type: Optional[QandyChar]
        self._uid = int(_UIDS.take(1)[0]) if _uid is None else _uid
        self._consumed = False
        self.index = int(index)

    @property
    def uid(self) -> int:
        return self._uid

    @property
    def consumed(self) -> bool:
        return self._consumed

    def _check_live(self):
        if self._consumed:
            raise AlreadyConsumed(f"qandy {self._uid} was already consumed")

    def _take_char(self) -> QandyChar:
        self._check_live()
        char = self._char
        self._consumed = True
        self._char = None
        return char

    def __repr__(self) -> str:
        state = "consumed" if self._consumed else "live"
        return f"Qandy(uid={self._uid}, index={self.index}, {state})"


@dataclass(frozen=True)
class MeasurementRecord:
    index: int
    basis: Basis
    outcome: int

    def __post_init__(self):
        if self.index < 0:
            raise ParameterError(f"record indices must be non-negative, got {self.index}")
        if self.outcome not in (0, 1):
            raise ParameterError(f"outcomes are bits, got {self.outcome}")
        object.__setattr__(self, "index", int(self.index))
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "outcome", int(self.outcome))

    @property
    def observed(self) -> QandyChar:
        return QandyChar.from_measurement(self.basis, self.outcome)


def prepare(char: QandyChar, index: int = 0) -> Qandy:
    """ Presses one of the four buttons of the qandy machine.

    Parameters
    ----------
    char : QandyChar

    index : int, optional (default=0)
        The key position the qandy stands for.

    Returns
    -------
    Qandy
        A fresh, live handle with a new uid."""
    return Qandy(char, index=index)


def measure(q: Qandy, basis: Basis, rng: Rng) -> MeasurementRecord:
    """ Looks at (``Basis.COLOR``) or tastes (``Basis.TASTE``) a qandy, consuming it.

    Parameters
    ----------
    q : Qandy

    basis : Basis

    rng : Rng
        Supplies the coin flip when ``basis`` is conjugate to the prepared basis.

    Returns
    -------
    MeasurementRecord

    Raises
    ------
    AlreadyConsumed"""
    char = q._take_char()
    basis = Basis(basis)
    outcome = char.bit if basis == char.basis else rng.coin()
    return MeasurementRecord(q.index, basis, outcome)


def random_char(rng: Rng) -> QandyChar:
    """A character drawn uniformly from {R, G, C, V}."""
    return QandyChar(int(rng.generator.integers(0, 4)))


def mismatch(declared: QandyChar, rec: MeasurementRecord) -> bool:
    """ ``True`` iff ``rec`` contradicts the declared character.

    A contradiction needs the record's basis to equal the declared character's basis
    and the outcome to differ from its value; records in the conjugate basis never
    contradict a declaration.

    Examples
    --------
    >>> mismatch(QandyChar.R, MeasurementRecord(0, Basis.COLOR, 1))
    True
    >>> mismatch(QandyChar.R, MeasurementRecord(0, Basis.TASTE, 0))
    False"""
    declared = QandyChar(declared)
    return declared.basis == rec.basis and declared.bit != rec.outcome


class QandyString(_Unclonable):
    """ A single-owner batch of qandies, the vectorised counterpart of :class:`Qandy`.

    Each position holds one qandy with its own uid and the key index it stands for.
    A string is consumed as a whole: measuring it, splitting it, joining it with
    another string or sending it down a channel all invalidate the handle, and the
    qandies live on (with their uids) only in the handles those operations return.

    Parameters
    ----------
    chars : array_like, shape-(N,)
        Character codes in ``{0, 1, 2, 3}``.

    indices : Optional[array_like], shape-(N,)
        Key positions; defaults to ``0, ..., N - 1``."""

    __slots__ = ("_chars", "_indices", "_uids", "_consumed")

    def __init__(self, chars, indices=None, *, _uids=None):
        chars = np.asarray(chars, dtype=np.uint8).reshape(-1)
        if chars.size and chars.max() > 3:
            raise ParameterError("qandy character codes must lie in {0, 1, 2, 3}")
        if indices is None:
            indices = np.arange(chars.size, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64).reshape(-1)
        if indices.shape != chars.shape:
            raise ParameterError(
                f"got {chars.size} characters but {indices.size} key indices"
            )
        if indices.size and indices.min() < 0:
            raise ParameterError("key indices must be non-negative")

        self._chars = chars
        self._indices = indices
        self._uids = _UIDS.take(chars.size) if _uids is None else _uids
        self._consumed = False

    @classmethod
    def prepare(cls, chars, indices=None) -> "QandyString":
        """Prepares one fresh qandy per character code."""
        return cls(np.array(chars, dtype=np.uint8, copy=True), indices)

    def __len__(self) -> int:
        return self._chars.size

    @property
    def consumed(self) -> bool:
        return self._consumed

    @property
    def indices(self) -> np.ndarray:
        return self._indices.copy()

    @property
    def uids(self) -> np.ndarray:
        return self._uids.copy()

    def _check_live(self):
        if self._consumed:
            raise AlreadyConsumed("this qandy string was already consumed")

    def _release(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        self._check_live()
        self._consumed = True
        out = self._chars, self._indices, self._uids
        self._chars = self._indices = self._uids = None
        return out

    def split(self, positions) -> Tuple["QandyString", "QandyString"]:
        """ Moves the qandies at local ``positions`` into one string and the rest into another.

        Parameters
        ----------
        positions : array_like[int]
            Positions within this string (not key indices).

        Returns
        -------
        Tuple[QandyString, QandyString]
            ``(selected, remaining)``, both in their original order.

        Raises
        ------
        AlreadyConsumed"""
        self._check_live()
        mask = np.zeros(len(self), dtype=bool)
        mask[np.asarray(positions, dtype=np.int64)] = True
        chars, indices, uids = self._release()
        return (
            QandyString(chars[mask], indices[mask], _uids=uids[mask]),
            QandyString(chars[~mask], indices[~mask], _uids=uids[~mask]),
        )

    @classmethod
    def join(cls, *strings: "QandyString") -> "QandyString":
        """ Moves the qandies of all ``strings`` into a single string, in order.

        Raises
        ------
        NoCloning
            The same string is passed twice.

        AlreadyConsumed"""
        if len({id(s) for s in strings}) != len(strings):
            raise NoCloning("a qandy string cannot be joined with itself")
        for s in strings:
            s._check_live()
        parts = [s._release() for s in strings]
        return cls(
            np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]),
            _uids=np.concatenate([p[2] for p in parts]),
        )

    def measure(self, bases, rng: Rng) -> "MeasurementRecords":
        """ Measures every qandy of the string, consuming it.

        Parameters
        ----------
        bases : array_like, shape-(N,)
            0 (look) or 1 (taste) per qandy.

        rng : Rng

        Returns
        -------
        MeasurementRecords

        Raises
        ------
        AlreadyConsumed"""
        self._check_live()
        bases = np.asarray(bases, dtype=np.uint8).reshape(-1)
        if bases.shape != self._chars.shape:
            raise ParameterError(
                f"got {bases.size} measurement bases for {len(self)} qandies"
            )
        chars, indices, _ = self._release()
        coins = rng.bits(chars.size)
        outcome = np.where(bases == (chars >> 1), chars & 1, coins).astype(np.uint8)
        return MeasurementRecords(indices, bases, outcome)

    def __repr__(self) -> str:
        if self._consumed:
            return "QandyString(consumed)"
        return f"QandyString(len={len(self)})"


@dataclass(frozen=True)
class MeasurementRecords:
    """ Column-oriented measurement records of one party.

    Attributes
    ----------
    index : numpy.ndarray, shape-(M,)
        Key position of each record. A party may hold two records for one index.

    basis : numpy.ndarray, shape-(M,)

    outcome : numpy.ndarray, shape-(M,)

    provenance : numpy.ndarray, shape-(M,)
        :class:`Provenance` tag of each record."""

    index: np.ndarray
    basis: np.ndarray
    outcome: np.ndarray
    provenance: Optional[np.ndarray] = None

    def __post_init__(self):
        index = np.asarray(self.index, dtype=np.int64).reshape(-1)
        basis = np.asarray(self.basis, dtype=np.uint8).reshape(-1)
        outcome = np.asarray(self.outcome, dtype=np.uint8).reshape(-1)
        provenance = (
            np.zeros(index.size, dtype=np.uint8)
            if self.provenance is None
            else np.asarray(self.provenance, dtype=np.uint8).reshape(-1)
        )
        if not index.size == basis.size == outcome.size == provenance.size:
            raise ParameterError("record columns must have equal lengths")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "provenance", provenance)

    def __len__(self) -> int:
        return self.index.size

    def __iter__(self) -> Iterator[MeasurementRecord]:
        for i, b, o in zip(self.index, self.basis, self.outcome):
            yield MeasurementRecord(int(i), Basis(int(b)), int(o))

    def select(self, mask) -> "MeasurementRecords":
        return MeasurementRecords(
            self.index[mask], self.basis[mask], self.outcome[mask], self.provenance[mask]
        )

    def tagged(self, provenance: Provenance) -> "MeasurementRecords":
        return MeasurementRecords(
            self.index,
            self.basis,
            self.outcome,
            np.full(len(self), int(provenance), dtype=np.uint8),
        )

    @classmethod
    def concat(cls, *records: "MeasurementRecords") -> "MeasurementRecords":
        return cls(
            np.concatenate([r.index for r in records]),
            np.concatenate([r.basis for r in records]),
            np.concatenate([r.outcome for r in records]),
            np.concatenate([r.provenance for r in records]),
        )

    def observed(self) -> np.ndarray:
        """The character code each record observed, ``2 * basis + outcome``."""
        return (2 * self.basis + self.outcome).astype(np.uint8)


def mismatch_mask(declared, records: MeasurementRecords) -> np.ndarray:
    """ The vectorised :func:`mismatch` predicate.

    Parameters
    ----------
    declared : array_like, shape-(n,)
        Declared character codes, indexed by key position.

    records : MeasurementRecords

    Returns
    -------
    numpy.ndarray[bool], shape-(M,)"""
    declared = np.asarray(declared, dtype=np.uint8)
    d = declared[records.index]
    return ((d >> 1) == records.basis) & ((d & 1) != records.outcome)


def count_mismatches(declared, records: MeasurementRecords) -> int:
    return int(np.count_nonzero(mismatch_mask(declared, records)))


def eliminated_characters(records: Sequence[MeasurementRecord]) -> Set[QandyChar]:
    """ The characters ruled out by a set of records for one key index.

    A record ``(basis, outcome)`` rules out the character of that basis with the
    other value, so one colour record and one taste record eliminate two of the
    four candidates."""
    return {QandyChar.from_measurement(r.basis, 1 - r.outcome) for r in records}
