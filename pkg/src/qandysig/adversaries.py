"""
Dishonest-party strategies.

A trial has at most one dishonest party. The :class:`Strategy` handed to a protocol
names that party's :class:`Role` along with its parameters, and the protocol calls the
functions of this module at the points where the dishonest party deviates. Each
function only receives what its party legitimately holds.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from qandysig.channels import Party
from qandysig.errors import BudgetOutOfRange, ParameterError
from qandysig.qandy import MeasurementRecords, QandyString
from qandysig.rng import Rng

__all__ = [
    "Role",
    "Strategy",
    "Forgery",
    "BUDGET_RULES",
    "gap_mismatches",
    "repudiation_budget",
    "repudiate_budget",
    "forge_min_error",
    "forge_guess",
    "split_key_alice",
    "min_error_mismatch_table",
    "min_error_rate",
]

BUDGET_RULES = ("gap", "midpoint", "threshold")
FORGER_POLICIES = ("min-error", "random")
FLIP_KINDS = ("value", "basis")


class Role(str, Enum):
    HONEST = "honest"
    FORGER_BOB = "forger"
    REPUDIATOR_ALICE = "repudiator"
    SPLIT_KEY_ALICE = "split-key"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Strategy:
    """ The behaviour of the (single) dishonest party of a trial.

    Parameters
    ----------
    role : Role
        ``Role.HONEST`` means that every party follows the protocol.

    budget : Optional[int]
        Repudiation: the number of deliberately tampered key positions. Takes
        precedence over ``budget_rule``.

    budget_rule : Optional[str]
        Repudiation: one of ``"gap"``, ``"midpoint"`` or ``"threshold"`` (see
        :func:`repudiation_budget`). Each protocol has its own default.

    policy : str, optional (default="min-error")
        Forgery: ``"min-error"`` declares what was observed, ``"random"`` guesses.

    flip : str, optional (default="value")
        Repudiation: ``"value"`` flips characters within their basis, ``"basis"``
        swaps them into the conjugate basis.

    identical : bool, optional (default=False)
        Split key: hand both recipients the same key.

    guesses : int, optional (default=1)
        Lamport forgery: how many preimage guesses the forger may try."""

    role: Role = Role.HONEST
    budget: Optional[int] = None
    budget_rule: Optional[str] = None
    policy: str = "min-error"
    flip: str = "value"
    identical: bool = False
    guesses: int = 1

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.budget is not None and (
            isinstance(self.budget, bool) or int(self.budget) != self.budget
        ):
            raise ParameterError(f"`budget` must be an integer, got {self.budget!r}")
        if self.budget is not None and self.budget < 0:
            raise BudgetOutOfRange(f"`budget` must be non-negative, got {self.budget}")
        if self.budget_rule is not None and self.budget_rule not in BUDGET_RULES:
            raise ParameterError(
                f"`budget_rule` must be one of {BUDGET_RULES}, got {self.budget_rule!r}"
            )
        if self.policy not in FORGER_POLICIES:
            raise ParameterError(
                f"`policy` must be one of {FORGER_POLICIES}, got {self.policy!r}"
            )
        if self.flip not in FLIP_KINDS:
            raise ParameterError(f"`flip` must be one of {FLIP_KINDS}, got {self.flip!r}")
        if self.guesses < 1:
            raise ParameterError(f"`guesses` must be at least 1, got {self.guesses}")

    @classmethod
    def from_name(cls, name: str, **params) -> "Strategy":
        """ Builds a strategy from its role name (``"honest"``, ``"forger"``,
        ``"repudiator"`` or ``"split-key"``) and keyword parameters."""
        try:
            role = Role(name)
        except ValueError:
            names = ", ".join(repr(r.value) for r in Role)
            raise ParameterError(f"unknown strategy {name!r}; expected one of {names}")
        return cls(role, **params)

    @property
    def dishonest(self) -> Optional[Party]:
        if self.role is Role.HONEST:
            return None
        if self.role is Role.FORGER_BOB:
            return Party.BOB
        return Party.ALICE

    def resolve_budget(self, default_rule: str, n: int, **kwargs) -> int:
        """The repudiation budget this strategy uses for a key of length ``n``."""
        if self.budget is not None:
            if self.budget > n:
                raise BudgetOutOfRange(
                    f"a budget of {self.budget} exceeds the key length {n}"
                )
            return int(self.budget)
        return repudiation_budget(self.budget_rule or default_rule, n, **kwargs)


def gap_mismatches(n: int, s_a: float, s_v: float) -> int:
    """ ``floor(n (s_v - s_a) / 2)``: how many mismatches a repudiating signature
    shows each recipient beyond the recipient's threshold ``s_a n``.

    Examples
    --------
    >>> gap_mismatches(200, 0.05, 0.15)
    10"""
    return int(math.floor(round(n * (s_v - s_a) / 2, 9)))


def repudiation_budget(
    rule: str,
    n: int,
    *,
    s_a: float,
    s_v: float,
    visibility: float = 1.0,
    noise: float = 0.0,
) -> int:
    """ The number of key positions a repudiating Alice tampers with.

    Parameters
    ----------
    rule : str
        ``"gap"``
            Aims the expected mismatch count seen by both recipients at
            ``s_a n + gap_mismatches(n, s_a, s_v)``, counting the mismatches that
            channel noise already causes: ``round((target / n - noise) n / visibility)``.
        ``"midpoint"``
            Aims the expected mismatch fraction seen by both recipients at
            ``(s_a + s_v) / 2``: ``round(((s_a + s_v) / 2 - noise) n / visibility)``.
        ``"threshold"``
            ``ceil(s_v n)``, the fewest tampered positions that the arbiter is
            certain to reject when it tolerates fewer than ``s_v n`` mismatches.

    n : int
        Key length.

    s_a, s_v : float
        Recipient and arbiter thresholds.

    visibility : float, optional (default=1.0)
        Expected contribution of one tampered position to a recipient's mismatch
        count, relative to ``n``.

    noise : float, optional (default=0.0)
        The mismatch fraction Alice expects from channel noise alone.

    Returns
    -------
    int
        A budget in ``[0, n]``.

    Examples
    --------
    >>> repudiation_budget("gap", 200, s_a=0.05, s_v=0.15)
    20
    >>> repudiation_budget("gap", 200, s_a=0.05, s_v=0.15, visibility=0.5)
    40"""
    if rule == "threshold":
        return int(min(max(math.ceil(round(s_v * n, 9)), 0), n))
    if rule == "gap":
        target = s_a + gap_mismatches(n, s_a, s_v) / n
    elif rule == "midpoint":
        target = (s_a + s_v) / 2
    else:
        raise ParameterError(f"`rule` must be one of {BUDGET_RULES}, got {rule!r}")
    if not 0 < visibility <= 1:
        raise ParameterError(f"`visibility` must lie in (0, 1], got {visibility}")
    budget = int(round(max(target - noise, 0.0) * n / visibility))
    return int(min(max(budget, 0), n))


def repudiate_budget(key, budget: int, rng: Rng, *, flip: str = "value") -> np.ndarray:
    """ Tampers with ``budget`` distinct, uniformly chosen positions of a private key.

    Parameters
    ----------
    key : array_like, shape-(n,)
        Character codes (or bits, for the classical schemes).

    budget : int

    rng : Rng
        Alice's stream.

    flip : str, optional (default="value")
        ``"value"`` flips the value within the basis (for bit keys this flips the
        bit); ``"basis"`` moves the character to the conjugate basis.

    Returns
    -------
    numpy.ndarray
        The tampered copy; ``key`` is left untouched.

    Raises
    ------
    BudgetOutOfRange"""
    key = np.asarray(key, dtype=np.uint8)
    if not 0 <= budget <= key.size:
        raise BudgetOutOfRange(f"`budget` must lie in [0, {key.size}], got {budget}")
    if flip not in FLIP_KINDS:
        raise ParameterError(f"`flip` must be one of {FLIP_KINDS}, got {flip!r}")
    out = key.copy()
    positions = rng.subset(key.size, int(budget))
    out[positions] ^= np.uint8(1 if flip == "value" else 2)
    return out


@dataclass
class Forgery:
    """ A forging Bob's working state for the attacked key.

    Attributes
    ----------
    declared : numpy.ndarray, shape-(n,)
        The characters Bob will present as Alice's signature.

    kept : MeasurementRecords
        Bob's records of the qandies he did not forward.

    forwarded_indices : numpy.ndarray
        Key indices of the regenerated qandies Bob sent to Charlie."""

    declared: np.ndarray
    kept: MeasurementRecords
    forwarded_indices: np.ndarray

    def learn(self, indices, chars):
        """ Adopts characters that Alice disclosed (in Bob's own TEST).

        Positions Bob already forwarded keep the character he regenerated, since
        that is what Charlie holds."""
        indices = np.asarray(indices, dtype=np.int64)
        chars = np.asarray(chars, dtype=np.uint8)
        keep = ~np.isin(indices, self.forwarded_indices)
        self.declared[indices[keep]] = chars[keep]


def forge_min_error(
    held: QandyString, forward_positions, n: int, rng: Rng, *, policy: str = "min-error"
) -> Tuple[Forgery, QandyString]:
    """ The forger's handling of his copy of the attacked public key.

    Bob measures every qandy he holds in a uniformly random basis before
    symmetrization, and declares the character he observed at each index
    (``policy="min-error"``) or a uniformly random one (``policy="random"``).
    Instead of the genuine qandies at ``forward_positions`` he forwards freshly
    prepared qandies of the characters he declares there.

    Parameters
    ----------
    held : QandyString
        Bob's copy of the key, consumed.

    forward_positions : array_like[int]
        Positions within ``held`` that must be forwarded to Charlie.

    n : int
        Key length.

    rng : Rng
        Bob's stream.

    policy : str, optional (default="min-error")

    Returns
    -------
    Tuple[Forgery, QandyString]
        The forger's state and the string to forward."""
    if policy not in FORGER_POLICIES:
        raise ParameterError(f"`policy` must be one of {FORGER_POLICIES}, got {policy!r}")
    records = held.measure(rng.bits(len(held)), rng)

    declared = np.zeros(n, dtype=np.uint8)
    if policy == "min-error":
        declared[records.index] = records.observed()
    else:
        declared[:] = rng.characters(n)

    mask = np.zeros(len(records), dtype=bool)
    mask[np.asarray(forward_positions, dtype=np.int64)] = True
    forwarded_indices = records.index[mask]
    forwarded = QandyString.prepare(declared[forwarded_indices], forwarded_indices)
    return Forgery(declared, records.select(~mask), forwarded_indices), forwarded


def forge_guess(own_key, received_index, received_value, rng: Rng) -> np.ndarray:
    """ A forging Bob's best guess of the arbiter's half of a classical signature.

    Bob knows the values Charlie forwarded to him and guesses every other bit.

    Returns
    -------
    numpy.ndarray, shape-(n,)"""
    guess = rng.bits(np.asarray(own_key).size)
    guess[np.asarray(received_index, dtype=np.int64)] = received_value
    return guess


def split_key_alice(n: int, rng: Rng, *, identical: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """ Prepares the private keys of an Alice who sends different public keys to the
    two recipients.

    Returns
    -------
    Tuple[numpy.ndarray, numpy.ndarray], each shape-(2, n)
        The character strings behind Bob's and Charlie's public keys, for both
        message bits."""
    bob = rng.characters((2, n))
    charlie = bob.copy() if identical else rng.characters((2, n))
    return bob, charlie


def min_error_mismatch_table() -> List[Dict[str, object]]:
    """ Exact enumeration of the minimum-error forgery against one qandy that Charlie
    retained.

    Every row is one combination of Alice's character, Bob's measurement basis and
    outcome (Bob declares what he saw), and Charlie's measurement basis and outcome,
    with its exact probability and whether Charlie's record contradicts Bob's
    declaration.

    Returns
    -------
    List[Dict[str, object]]
        64 rows with keys ``alice_char, bob_basis, bob_outcome, charlie_basis,
        charlie_outcome, probability, mismatch``."""
    names = "RGCV"
    bases = ("color", "taste")
    half = Fraction(1, 2)

    def outcome_probability(char: int, basis: int, outcome: int) -> Fraction:
        if basis != char >> 1:
            return half
        return Fraction(int(outcome == (char & 1)))

    rows = []
    for char, bb, bo, cb, co in product(range(4), range(2), range(2), range(2), range(2)):
        probability = (
            Fraction(1, 4)
            * half
            * outcome_probability(char, bb, bo)
            * half
            * outcome_probability(char, cb, co)
        )
        rows.append(
            dict(
                alice_char=names[char],
                bob_basis=bases[bb],
                bob_outcome=bo,
                charlie_basis=bases[cb],
                charlie_outcome=co,
                probability=probability,
                mismatch=bb == cb and co != bo,
            )
        )
    return rows


def min_error_rate() -> Fraction:
    """The probability that a min-error forgery mismatches one Charlie-retained qandy (1/8)."""
    return sum(
        (r["probability"] for r in min_error_mismatch_table() if r["mismatch"]), Fraction(0)
    )
