"""
One-time pad signatures (OTP-S).

For each message bit ``b`` Alice holds two random n-bit strings, ``X^B_b`` (sent to
Bob) and ``X^C_b`` (sent to Charlie). Bob and Charlie each forward a random half of
their string to the other, so that Alice cannot tell which bits of either string
ends up with whom. The signature of ``b`` is ``(b, X^B_b, X^C_b)``.

The same script drives P2 and AWKA, where the strings and pads come out of qandy
key distribution instead of being pre-shared; there the recipient and arbiter
checks may tolerate a fraction of mismatches (see ``s_a`` and
``forwarded_tolerance``)."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from qandysig._utils import as_bits, check_even, check_fraction
from qandysig.adversaries import Role, Strategy, forge_guess, repudiate_budget
from qandysig.channels import AuthChannel, PadStore, Party, Transcript
from qandysig.errors import KeyAlreadyUsed, ParameterError
from qandysig.protocol_base import (
    Arbitration,
    Protocol,
    ProtocolParams,
    TrialResult,
    Verdict,
    classify,
)
from qandysig.rng import Rng, Stream

__all__ = [
    "OtpsParams",
    "AliceKeys",
    "RecipientKeys",
    "OtpsKeys",
    "OtpsSignature",
    "OtpsProtocol",
    "otps_keygen",
    "otps_distribute",
    "otps_symmetrize",
    "otps_sign",
    "otps_verify",
    "otps_arbitrate",
    "forwarded_overlap",
    "mismatches",
    "pad_budget",
    "signature_phase",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OtpsParams:
    """ Parameters of OTP-S.

    Parameters
    ----------
    n : int
        Key length per message bit; even.

    s_v : float
        Arbiter threshold, in (0, 1/4).

    tag_length : int, optional (default=64)
        Pad bits spent on the authentication tag of each classical message."""

    n: int
    s_v: float
    tag_length: int = 64

    def __post_init__(self):
        check_even(self.n, "n")
        check_fraction(self.s_v, "s_v", high=0.25, low_open=True, high_open=True)


@dataclass
class AliceKeys:
    """ Alice's strings; row ``b`` of ``x_b`` and ``x_c`` belongs to message bit ``b``."""

    x_b: np.ndarray
    x_c: np.ndarray
    used: bool = False

    @property
    def n(self) -> int:
        return self.x_b.shape[1]


@dataclass
class RecipientKeys:
    """ What Bob (or Charlie) holds for both message bits.

    Attributes
    ----------
    party : Party

    own : numpy.ndarray, shape-(2, n)
        Bob's copy of ``X^B`` (Charlie's copy of ``X^C``).

    forwarded : List[numpy.ndarray]
        Per message bit, the indices of ``own`` sent to the other recipient.

    received_index, received_value : List[numpy.ndarray]
        Per message bit, the indexed bits of the other recipient's string."""

    party: Party
    own: np.ndarray
    forwarded: List[np.ndarray] = field(default_factory=list)
    received_index: List[np.ndarray] = field(default_factory=list)
    received_value: List[np.ndarray] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.own.shape[1]


@dataclass
class OtpsKeys:
    alice: AliceKeys
    bob: RecipientKeys
    charlie: RecipientKeys


@dataclass(frozen=True, eq=False)
class OtpsSignature:
    b: int
    x_b: np.ndarray
    x_c: np.ndarray

    def to_bits(self) -> np.ndarray:
        return np.concatenate([[self.b], self.x_b, self.x_c]).astype(np.uint8)


def pad_budget(n: int, tag_length: int = 64) -> Dict[Tuple[Party, Party], int]:
    """ Pad bits each pair spends on one OTP-S run.

    Alice sends two n-bit strings to each recipient; Bob and Charlie each send, per
    message bit, an n-bit index mask plus n/2 values. Alice's signature and Bob's
    dispute message each carry one tag."""
    return {
        (Party.ALICE, Party.BOB): 2 * n + tag_length,
        (Party.ALICE, Party.CHARLIE): 2 * n,
        (Party.BOB, Party.CHARLIE): 2 * 2 * (n + n // 2) + tag_length,
    }


def otps_keygen(n: int, rng: Rng) -> AliceKeys:
    """Draws ``X^B_b`` and ``X^C_b`` uniformly for ``b`` in {0, 1}."""
    check_even(n, "n")
    return AliceKeys(rng.bits((2, n)), rng.bits((2, n)))


def otps_distribute(alice: AliceKeys, pads: PadStore) -> OtpsKeys:
    """ Sends ``X^B_b`` to Bob and ``X^C_b`` to Charlie under the one-time pad.

    Raises
    ------
    PadExhausted"""
    bob = np.stack(
        [pads.send(alice.x_b[b], Party.ALICE, Party.BOB, step="distribute") for b in (0, 1)]
    )
    charlie = np.stack(
        [
            pads.send(alice.x_c[b], Party.ALICE, Party.CHARLIE, step="distribute")
            for b in (0, 1)
        ]
    )
    return OtpsKeys(alice, RecipientKeys(Party.BOB, bob), RecipientKeys(Party.CHARLIE, charlie))


def _forward(
    sender: RecipientKeys, receiver: RecipientKeys, b: int, pads: PadStore, rng: Rng
):
    n = sender.n
    chosen = rng.subset(n, n // 2)
    mask = np.zeros(n, dtype=np.uint8)
    mask[chosen] = 1
    message = np.concatenate([mask, sender.own[b, chosen]])
    received = pads.send(message, sender.party, receiver.party, step="symmetrize")

    sender.forwarded.append(chosen)
    receiver.received_index.append(np.flatnonzero(received[:n]))
    receiver.received_value.append(received[n:].copy())


def otps_symmetrize(keys: OtpsKeys, pads: PadStore, rng_bob: Rng, rng_charlie: Rng) -> OtpsKeys:
    """ Bob and Charlie each forward an independent, uniformly random half of their
    string (index and value) to the other, under the one-time pad.

    The message is an n-bit index mask followed by the n/2 chosen values in index
    order.

    Raises
    ------
    PadExhausted"""
    for b in (0, 1):
        _forward(keys.bob, keys.charlie, b, pads, rng_bob)
        _forward(keys.charlie, keys.bob, b, pads, rng_charlie)
    return keys


def otps_sign(alice: AliceKeys, b: int) -> OtpsSignature:
    """ Returns ``(b, X^B_b, X^C_b)``.

    Raises
    ------
    KeyAlreadyUsed"""
    if b not in (0, 1):
        raise ParameterError(f"messages are single bits, got {b!r}")
    if alice.used:
        raise KeyAlreadyUsed("these OTP-S keys have already signed a message")
    alice.used = True
    return OtpsSignature(int(b), alice.x_b[b].copy(), alice.x_c[b].copy())


def mismatches(holder: RecipientKeys, sig: OtpsSignature) -> Tuple[int, int]:
    """ Mismatches between a signature and what ``holder`` holds for its bit.

    Returns
    -------
    Tuple[int, int]
        ``(own, received)``: mismatches on the holder's own string and on the
        forwarded bits of the other string."""
    b = sig.b
    own_sig, other_sig = (sig.x_b, sig.x_c) if holder.party is Party.BOB else (sig.x_c, sig.x_b)
    own = int(np.count_nonzero(as_bits(own_sig) != holder.own[b]))
    index = holder.received_index[b]
    received = int(np.count_nonzero(as_bits(other_sig)[index] != holder.received_value[b]))
    return own, received


def otps_verify(bob: RecipientKeys, sig: OtpsSignature, *, s_a: Optional[float] = None) -> Verdict:
    """ Bob's verification.

    Parameters
    ----------
    bob : RecipientKeys

    sig : OtpsSignature

    s_a : Optional[float]
        If ``None`` every bit Bob holds must match. Otherwise the mismatch fraction
        on ``X^B_b`` and on the forwarded bits of ``X^C_b`` must each stay below
        ``s_a``.

    Returns
    -------
    Verdict"""
    own, received = mismatches(bob, sig)
    if s_a is None:
        ok = own == 0 and received == 0
    else:
        size = max(bob.received_index[sig.b].size, 1)
        ok = own / bob.n < s_a and received / size < s_a
    return Verdict.ACC if ok else Verdict.REJ


def otps_arbitrate(
    charlie: RecipientKeys,
    sig: OtpsSignature,
    s_v: float,
    *,
    forwarded_tolerance: Optional[float] = None,
) -> Arbitration:
    """ Charlie's ruling on the signature Bob forwards.

    Charlie accepts iff (a) the bits of ``X^B_b`` that Bob forwarded to him match
    (all of them, or a fraction below ``forwarded_tolerance`` when given), and
    (b) fewer than ``s_v n`` bits of his ``X^C_b`` mismatch.

    Returns
    -------
    Arbitration"""
    own, received = mismatches(charlie, sig)
    if forwarded_tolerance is None:
        forwarded_ok = received == 0
    else:
        size = max(charlie.received_index[sig.b].size, 1)
        forwarded_ok = received / size < forwarded_tolerance
    if forwarded_ok and own < s_v * charlie.n:
        return Arbitration.ACCEPT_BOB
    return Arbitration.REJECT_BOB


def forwarded_overlap(keys: OtpsKeys, b: int) -> int:
    """The number of indices both recipients forwarded for message bit ``b``."""
    return np.intersect1d(keys.bob.forwarded[b], keys.charlie.forwarded[b]).size


@dataclass
class SignaturePhase:
    """The outcome of the signing, verification and dispute steps."""

    message: int
    bob_verdict: Verdict
    ruling: Arbitration
    mismatch_counts: Dict[str, Any]


def signature_phase(
    keys: OtpsKeys,
    pads: PadStore,
    strategy: Strategy,
    rng: Rng,
    transcript: Transcript,
    *,
    s_v: float,
    s_a: Optional[float] = None,
    budget_rule: str = "threshold",
    noise: float = 0.0,
    tag_length: int = 64,
    auth_pads: Optional[PadStore] = None,
) -> SignaturePhase:
    """ Runs symmetrization, signing, verification and the dispute.

    Parameters
    ----------
    keys : OtpsKeys
        Distributed keys.

    pads : PadStore
        Must hold the Bob-Charlie pad.

    strategy : Strategy

    rng : Rng
        The trial's stream.

    transcript : Transcript

    s_v : float

    s_a : Optional[float]
        ``None`` for zero-tolerance verification (OTP-S, P2); the AWKA threshold
        otherwise, in which case the arbiter's forwarded-bit check uses ``s_v``.

    budget_rule : str, optional (default="threshold")
        Default repudiation budget rule.

    noise : float, optional (default=0.0)
        Alice's estimate of the honest mismatch rate on Charlie's string.

    tag_length : int, optional (default=64)

    auth_pads : Optional[PadStore]
        Where Alice's signature tag is drawn from; ``None`` only accounts for it.

    Returns
    -------
    SignaturePhase"""
    alice, bob, charlie = (
        rng.child(Stream.ALICE),
        rng.child(Stream.BOB),
        rng.child(Stream.CHARLIE),
    )
    n = keys.alice.n
    otps_symmetrize(keys, pads, bob, charlie)

    to_bob = AuthChannel(Party.ALICE, Party.BOB, transcript, tag_length=tag_length, pads=auth_pads)
    to_charlie = AuthChannel(Party.BOB, Party.CHARLIE, transcript, tag_length=tag_length, pads=pads)

    m = alice.coin()
    sig = otps_sign(keys.alice, m)
    if strategy.role is Role.REPUDIATOR_ALICE:
        budget = strategy.resolve_budget(
            budget_rule, n, s_a=0.0 if s_a is None else s_a, s_v=s_v, noise=noise
        )
        sig = OtpsSignature(m, sig.x_b, repudiate_budget(sig.x_c, budget, alice))
        logger.debug("repudiating Alice flipped %d bits of X^C_%d", budget, m)
    to_bob.send(sig.to_bits(), step="sign", kind="signature")
    bob_verdict = otps_verify(keys.bob, sig, s_a=s_a)

    claim = sig
    if strategy.role is Role.FORGER_BOB:
        target = 1 - m
        claim = OtpsSignature(
            target,
            keys.bob.own[target].copy(),
            forge_guess(
                keys.bob.own[target],
                keys.bob.received_index[target],
                keys.bob.received_value[target],
                bob,
            ),
        )
    to_charlie.send(claim.to_bits(), step="dispute", kind="signature")
    tolerance = None if s_a is None else s_v
    ruling = otps_arbitrate(keys.charlie, claim, s_v, forwarded_tolerance=tolerance)

    bob_own, bob_received = mismatches(keys.bob, sig)
    charlie_own, charlie_received = mismatches(keys.charlie, claim)
    counts = dict(
        bob_own=bob_own,
        bob_received=bob_received,
        charlie_own=charlie_own,
        charlie_received=charlie_received,
        charlie_fraction=charlie_own / n,
    )
    return SignaturePhase(m, bob_verdict, ruling, counts)


class OtpsProtocol(Protocol):
    """ OTP-S with pads pre-shared between every pair of parties.

    Each pad holds exactly the bits one run needs (see :func:`pad_budget`)."""

    name = "otps"
    roles = frozenset({Role.HONEST, Role.FORGER_BOB, Role.REPUDIATOR_ALICE})
    budget_rule = "threshold"

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "OtpsProtocol":
        if params.s_v is None:
            raise ParameterError("OTP-S needs the arbiter threshold `s_v`")
        return cls(OtpsParams(params.n, params.s_v, params.tag_length))

    def __call__(self, strategy: Strategy, rng: Rng, transcript: Transcript) -> TrialResult:
        params = self.params
        pad_rng = rng.child(Stream.PADS)
        pads = PadStore(transcript)
        for (a, b), size in pad_budget(params.n, params.tag_length).items():
            pads.install(a, b, pad_rng.bits(size))

        keys = otps_distribute(otps_keygen(params.n, rng.child(Stream.ALICE).child(0)), pads)
        phase = signature_phase(
            keys,
            pads,
            strategy,
            rng,
            transcript,
            s_v=params.s_v,
            budget_rule=self.budget_rule,
            tag_length=params.tag_length,
            auth_pads=pads,
        )
        return TrialResult(
            protocol=self.name,
            n=params.n,
            role=strategy.role,
            outcome=classify(
                strategy.role, aborted=False, bob=phase.bob_verdict, charlie=phase.ruling
            ),
            message=phase.message,
            bob_verdict=phase.bob_verdict,
            charlie_verdict=phase.ruling,
            mismatch_counts=phase.mismatch_counts,
        )
