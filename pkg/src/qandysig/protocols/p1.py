"""
The qandy signature protocol P1.

For each message bit ``b`` Alice draws a private string ``X_b`` of n characters and
prepares two qandy strings ("public keys") encoding it, one for Bob and one for
Charlie. The recipients each forward a random half of their qandies to the other
(without measuring them), then measure everything they hold in random bases. After
a TEST of the channels, Alice signs ``b`` by disclosing ``X_b``; Bob accepts if fewer
than ``s_a n`` of his records contradict it, and in a dispute Charlie sides with Bob
if fewer than ``s_v n`` of his records do.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from qandysig._utils import check_fraction, hoeffding_delta
from qandysig.adversaries import (
    Role,
    Strategy,
    forge_min_error,
    repudiate_budget,
    split_key_alice,
)
from qandysig.channels import AuthChannel, Party, QandyChannel, Transcript
from qandysig.errors import InsufficientSample, KeyAlreadyUsed, ParameterError
from qandysig.protocol_base import (
    Arbitration,
    Protocol,
    ProtocolParams,
    TrialResult,
    Verdict,
    check_key_length,
    check_thresholds,
    classify,
)
from qandysig.qandy import (
    MeasurementRecords,
    Provenance,
    QandyString,
    count_mismatches,
    mismatch_mask,
)
from qandysig.rng import Rng, Stream

__all__ = [
    "P1Params",
    "PrivateKey",
    "P1Signature",
    "KeyHoldings",
    "PublicKeyHoldings",
    "TestReport",
    "P1Protocol",
    "p1_keygen",
    "prepare_public_keys",
    "p1_distribute",
    "p1_symmetrize",
    "p1_disclose",
    "p1_test",
    "p1_sign",
    "p1_verify",
    "p1_arbitrate",
    "p1_run",
    "copy_counts",
    "measure_holdings",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class P1Params:
    """ Parameters of P1.

    Parameters
    ----------
    n : int
        Qandies per public key; even.

    s_a : float
        Recipient threshold.

    s_v : float
        Arbiter threshold.

    eps_delta : float, optional (default=0.05)
        TEST confidence: the noise rate of the untested records exceeds the TEST's
        estimate by more than ``delta(t)`` with probability at most ``eps_delta``.

    p_channel : float, optional (default=0.0)
        Flip probability of every qandy channel (noise or eavesdropping).

    test_fraction : float, optional (default=0.2)
        Fraction of each recipient's records revealed per TEST.

    p_e : float, optional (default=0.0)
        The honest per-record mismatch rate the thresholds were designed for.

    p_f : float, optional (default=0.125)
        The per-record mismatch rate of a forger on Charlie's retained qandies.

    tag_length : int, optional (default=64)

    Raises
    ------
    ParameterError
        Unless ``n`` is even and ``0 <= p_e < s_a < s_v < p_f``."""

    n: int
    s_a: float
    s_v: float
    eps_delta: float = 0.05
    p_channel: float = 0.0
    test_fraction: float = 0.2
    p_e: float = 0.0
    p_f: float = 0.125
    tag_length: int = 64

    def __post_init__(self):
        check_key_length(self.n)
        check_thresholds(self.p_e, self.s_a, self.s_v, self.p_f)
        check_fraction(self.eps_delta, "eps_delta", low_open=True, high_open=True)
        check_fraction(self.test_fraction, "test_fraction", low_open=True, high_open=True)
        check_fraction(self.p_channel, "p_channel", high=0.5, high_open=True)

    @property
    def nominal_test_size(self) -> int:
        """ The number of declared-basis records a TEST nominally compares: half of
        the ``test_fraction * n`` records it reveals."""
        return max(int(round(self.test_fraction * self.n / 2)), 1)

    def margin_applies(self, t: int) -> bool:
        """ Whether a TEST over ``t`` declared-basis records can afford the margin
        ``delta(t) <= s_a``."""
        return hoeffding_delta(t, self.eps_delta) <= self.s_a


class PrivateKey:
    """ Alice's private strings ``X_0, X_1``.

    ``charlie`` differs from ``bob`` only when Alice prepares different public keys
    for the two recipients."""

    def __init__(self, bob, charlie=None):
        self.bob = np.asarray(bob, dtype=np.uint8)
        self.charlie = self.bob if charlie is None else np.asarray(charlie, dtype=np.uint8)
        self.used = False

    @property
    def n(self) -> int:
        return self.bob.shape[1]

    def for_recipient(self, party: Party) -> np.ndarray:
        return self.charlie if Party(party) is Party.CHARLIE else self.bob


@dataclass(frozen=True, eq=False)
class P1Signature:
    b: int
    chars: np.ndarray


@dataclass
class KeyHoldings:
    """ One recipient's material for one message bit.

    Attributes
    ----------
    records : MeasurementRecords
        Records that count towards verification and arbitration.

    forwarded : numpy.ndarray
        Key indices this recipient forwarded away.

    received : numpy.ndarray
        Key indices the other recipient disclosed as forwarded.

    tested : Optional[MeasurementRecords]
        Records consumed by the TEST."""

    records: MeasurementRecords
    forwarded: np.ndarray
    received: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    tested: Optional[MeasurementRecords] = None


@dataclass
class PublicKeyHoldings:
    party: Party
    keys: List[KeyHoldings]


@dataclass(frozen=True, eq=False)
class TestReport:
    """ The statistics of one TEST between Alice and a recipient, for one key.

    ``margin_applied`` is ``False`` when ``delta > s_a``; the TEST then compared the
    rate against ``s_a`` itself."""

    __test__ = False  # not a pytest test class

    recipient: Party
    b: int
    revealed: np.ndarray
    t: int
    mismatches: int
    rate: float
    delta: float
    threshold: float
    aborted: bool
    margin_applied: bool = True

    def to_record(self) -> Dict[str, Any]:
        return dict(
            pair=f"alice-{self.recipient}",
            key=self.b,
            revealed=int(self.revealed.size),
            t=self.t,
            mismatches=self.mismatches,
            rate=self.rate,
            delta=self.delta,
            threshold=self.threshold,
            margin_applied=self.margin_applied,
            aborted=self.aborted,
        )


def prepare_public_keys(key: PrivateKey) -> List[Tuple[QandyString, QandyString]]:
    """Per message bit, Bob's and Charlie's copy of the public key."""
    return [
        (QandyString.prepare(key.bob[b]), QandyString.prepare(key.charlie[b]))
        for b in (0, 1)
    ]


def p1_keygen(params: P1Params, rng: Rng) -> Tuple[PrivateKey, List[Tuple[QandyString, QandyString]]]:
    """ Draws ``X_0, X_1`` uniformly over the four characters and prepares two
    copies of each public key.

    Returns
    -------
    Tuple[PrivateKey, List[Tuple[QandyString, QandyString]]]"""
    key = PrivateKey(rng.characters((2, params.n)))
    return key, prepare_public_keys(key)


def p1_distribute(
    public_keys: List[Tuple[QandyString, QandyString]],
    to_bob: QandyChannel,
    to_charlie: QandyChannel,
) -> Tuple[List[QandyString], List[QandyString]]:
    """ Sends one copy of each public key to Bob and the other to Charlie.

    Returns
    -------
    Tuple[List[QandyString], List[QandyString]]
        The strings Bob and Charlie hold, per message bit."""
    bob, charlie = [], []
    for bob_copy, charlie_copy in public_keys:
        bob.append(to_bob.send_string(bob_copy, step="distribute"))
        charlie.append(to_charlie.send_string(charlie_copy, step="distribute"))
    return bob, charlie


def measure_holdings(kept: QandyString, received: QandyString, rng: Rng) -> MeasurementRecords:
    """ Measures every held qandy in an independent uniformly random basis."""
    kept_records = kept.measure(rng.bits(len(kept)), rng).tagged(Provenance.KEPT)
    received_records = received.measure(rng.bits(len(received)), rng).tagged(
        Provenance.RECEIVED
    )
    return MeasurementRecords.concat(kept_records, received_records)


# (b, held string, forward positions) -> (string to forward, records of the kept part)
Intercept = Callable[[int, QandyString, np.ndarray], Optional[Tuple[QandyString, MeasurementRecords]]]


def p1_symmetrize(
    bob_strings: List[QandyString],
    charlie_strings: List[QandyString],
    bob_to_charlie: QandyChannel,
    charlie_to_bob: QandyChannel,
    rng_bob: Rng,
    rng_charlie: Rng,
    *,
    intercept: Optional[Intercept] = None,
) -> Tuple[PublicKeyHoldings, PublicKeyHoldings]:
    """ The symmetrization step.

    For each message bit, Bob and Charlie each pick a uniformly random subset of n/2
    of their qandies and forward them, unmeasured, to the other. Each then measures
    all n qandies in hand in uniformly random bases.

    Parameters
    ----------
    bob_strings, charlie_strings : List[QandyString]
        Consumed.

    bob_to_charlie, charlie_to_bob : QandyChannel

    rng_bob, rng_charlie : Rng

    intercept : Optional[Callable]
        Lets a dishonest Bob replace his handling of a key: called with
        ``(b, string, forward_positions)``, it returns the string to forward and
        the records of the qandies Bob kept, or ``None`` to behave honestly.

    Returns
    -------
    Tuple[PublicKeyHoldings, PublicKeyHoldings]"""
    bob_keys, charlie_keys = [], []
    for b in (0, 1):
        bob_held, charlie_held = bob_strings[b], charlie_strings[b]

        bob_positions = rng_bob.subset(len(bob_held), len(bob_held) // 2)
        handled = None if intercept is None else intercept(b, bob_held, bob_positions)
        if handled is None:
            bob_forward, bob_kept = bob_held.split(bob_positions)
            bob_kept_records = None
        else:
            bob_forward, bob_kept_records = handled
        bob_forwarded = bob_forward.indices

        charlie_positions = rng_charlie.subset(len(charlie_held), len(charlie_held) // 2)
        charlie_forward, charlie_kept = charlie_held.split(charlie_positions)
        charlie_forwarded = charlie_forward.indices

        at_charlie = bob_to_charlie.send_string(bob_forward, step="symmetrize")
        at_bob = charlie_to_bob.send_string(charlie_forward, step="symmetrize")

        if bob_kept_records is None:
            bob_records = measure_holdings(bob_kept, at_bob, rng_bob)
        else:
            received = at_bob.measure(rng_bob.bits(len(at_bob)), rng_bob)
            bob_records = MeasurementRecords.concat(
                bob_kept_records.tagged(Provenance.KEPT), received.tagged(Provenance.RECEIVED)
            )
        charlie_records = measure_holdings(charlie_kept, at_charlie, rng_charlie)

        bob_keys.append(KeyHoldings(bob_records, bob_forwarded))
        charlie_keys.append(KeyHoldings(charlie_records, charlie_forwarded))
    return PublicKeyHoldings(Party.BOB, bob_keys), PublicKeyHoldings(Party.CHARLIE, charlie_keys)


def p1_disclose(bob: PublicKeyHoldings, charlie: PublicKeyHoldings, transcript: Transcript):
    """ Bob and Charlie disclose to one another the indices they forwarded."""
    for sender, receiver in ((bob, charlie), (charlie, bob)):
        channel = AuthChannel(sender.party, receiver.party, transcript)
        for b in (0, 1):
            indices = channel.send(sender.keys[b].forwarded, step="disclose", kind="indices")
            receiver.keys[b].received = np.asarray(indices, dtype=np.int64)


def copy_counts(bob_forwarded, charlie_forwarded, n: int) -> np.ndarray:
    """ The number of copies of each key index that Bob measured (0, 1 or 2).

    Bob holds his own copy of every index he did not forward and Charlie's copy of
    every index Charlie forwarded."""
    positions = np.arange(n)
    kept = ~np.isin(positions, bob_forwarded)
    received = np.isin(positions, charlie_forwarded)
    return kept.astype(np.int64) + received.astype(np.int64)


def p1_test(
    declared,
    holdings: KeyHoldings,
    params: P1Params,
    *,
    alice_rng: Rng,
    recipient_rng: Rng,
    recipient: Party = Party.BOB,
    b: int = 0,
    transcript: Optional[Transcript] = None,
) -> TestReport:
    """ The TEST between Alice and one recipient, for one key.

    ``round(test_fraction * m)`` of the recipient's ``m`` records are revealed: half
    of them by Alice, who picks key indices, and half by the recipient, who picks
    records. Every record at a revealed index is tested: Alice discloses her
    characters there and the noise rate is estimated over the records measured in
    the declared basis (records in the conjugate basis carry no information). The
    tested records are removed from ``holdings``.

    The TEST aborts iff the estimated rate exceeds ``s_a - delta(t)`` with
    ``delta(t) = sqrt(ln(1 / eps_delta) / (2 t))``. That margin needs
    ``delta(t) <= s_a``; on smaller samples it is dropped and the TEST aborts iff
    the rate exceeds ``s_a``, which the report records as ``margin_applied=False``.

    Parameters
    ----------
    declared : numpy.ndarray, shape-(n,)
        The characters Alice holds for this recipient's key.

    holdings : KeyHoldings
        Updated in place.

    params : P1Params

    alice_rng, recipient_rng : Rng

    recipient : Party

    b : int

    transcript : Optional[Transcript]

    Returns
    -------
    TestReport

    Raises
    ------
    InsufficientSample
        No tested record was measured in the declared basis."""
    declared = np.asarray(declared, dtype=np.uint8)
    records = holdings.records
    m = len(records)
    k = int(round(params.test_fraction * m))
    k_alice = min(k // 2, declared.size)
    k_recipient = min(k - k // 2, m)

    alice_picks = alice_rng.subset(declared.size, k_alice)
    recipient_picks = records.index[recipient_rng.subset(m, k_recipient)]
    revealed = np.union1d(alice_picks, recipient_picks).astype(np.int64)

    in_test = np.isin(records.index, revealed)
    tested = records.select(in_test)
    holdings.records = records.select(~in_test)
    holdings.tested = tested

    if transcript is not None:
        AuthChannel(Party.ALICE, recipient, transcript).send(
            np.concatenate([revealed, declared[revealed]]), step="test", kind="reveal"
        )
        AuthChannel(recipient, Party.ALICE, transcript).send(
            np.concatenate([tested.index, tested.basis, tested.outcome]),
            step="test",
            kind="records",
        )

    same_basis = (declared[tested.index] >> 1) == tested.basis
    t = int(np.count_nonzero(same_basis))
    if t == 0:
        raise InsufficientSample(
            f"the alice-{recipient} TEST of key {b} has no records in the declared basis"
        )
    mismatches = int(np.count_nonzero(mismatch_mask(declared, tested)))
    rate = mismatches / t
    delta = hoeffding_delta(t, params.eps_delta)
    margin_applied = params.margin_applies(t)
    threshold = params.s_a - delta if margin_applied else params.s_a
    report = TestReport(
        Party(recipient),
        b,
        revealed,
        t,
        mismatches,
        rate,
        delta,
        threshold,
        rate > threshold,
        margin_applied,
    )
    logger.debug(
        "TEST alice-%s key %d: t=%d mismatches=%d rate=%.4f threshold=%.4f margin=%s",
        recipient,
        b,
        t,
        mismatches,
        rate,
        threshold,
        margin_applied,
    )
    return report


def p1_sign(key: PrivateKey, b: int, channel: Optional[AuthChannel] = None) -> P1Signature:
    """ Signs ``b`` by disclosing ``(b, X_b)``.

    Raises
    ------
    KeyAlreadyUsed"""
    if b not in (0, 1):
        raise ParameterError(f"messages are single bits, got {b!r}")
    if key.used:
        raise KeyAlreadyUsed("this private key has already signed a message")
    key.used = True
    sig = P1Signature(int(b), key.bob[b].copy())
    if channel is not None:
        channel.send(sig.chars, step="sign", kind="signature")
    return sig


def p1_verify(records: MeasurementRecords, signature: P1Signature, s_a: float, n: int) -> Verdict:
    """ ``ACC`` iff fewer than ``s_a n`` of Bob's records contradict the signature."""
    if count_mismatches(signature.chars, records) < s_a * n:
        return Verdict.ACC
    return Verdict.REJ


def p1_arbitrate(
    records: MeasurementRecords, signature: P1Signature, s_v: float, n: int
) -> Arbitration:
    """ Sides with Bob iff fewer than ``s_v n`` of Charlie's records contradict the
    signature Bob forwards."""
    if count_mismatches(signature.chars, records) < s_v * n:
        return Arbitration.ACCEPT_BOB
    return Arbitration.REJECT_BOB


class P1Protocol(Protocol):
    """ P1 with noisy qandy channels between every pair of parties.

    Strategies:

    - ``forger``: Bob attacks the key Alice does not sign with the min-error
      measurement (see :func:`~qandysig.adversaries.forge_min_error`) and claims
      that message in a dispute.
    - ``repudiator``: Alice distributes honestly and tampers with her signature. By
      default she aims each recipient's mismatch count at
      ``s_a n + floor(n (s_v - s_a) / 2)``, given the TEST noise estimate.
    - ``split-key``: Alice prepares different keys for Bob and Charlie, signs with
      Bob's key and tampers with ``budget`` (default 0) positions of it."""

    name = "p1"
    budget_rule = "gap"

    def __init__(self, params: P1Params):
        super().__init__(params)
        t = params.nominal_test_size
        if not params.margin_applies(t):
            logger.warning(
                "p1 at n=%d: a TEST compares about %d records, too few for the margin "
                "delta=%.3f to fit under s_a=%.3f; TESTs abort above s_a instead",
                params.n,
                t,
                hoeffding_delta(t, params.eps_delta),
                params.s_a,
            )

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "P1Protocol":
        if params.s_a is None or params.s_v is None:
            raise ParameterError("P1 needs both thresholds `s_a` and `s_v`")
        return cls(
            P1Params(
                n=params.n,
                s_a=params.s_a,
                s_v=params.s_v,
                eps_delta=params.eps_delta,
                p_channel=params.p_channel,
                test_fraction=params.test_fraction,
                p_e=params.p_e,
                p_f=params.p_f,
                tag_length=params.tag_length,
            )
        )

    def __call__(self, strategy: Strategy, rng: Rng, transcript: Transcript) -> TrialResult:
        params = self.params
        n = params.n
        alice = rng.child(Stream.ALICE)
        bob = rng.child(Stream.BOB)
        charlie = rng.child(Stream.CHARLIE)

        def channel(stream, sender, receiver):
            return QandyChannel(
                params.p_channel,
                rng.child(stream),
                sender=sender,
                receiver=receiver,
                transcript=transcript,
            )

        role = strategy.role
        m = alice.coin()
        if role is Role.SPLIT_KEY_ALICE:
            key = PrivateKey(*split_key_alice(n, alice, identical=strategy.identical))
        else:
            key = PrivateKey(alice.characters((2, n)))

        bob_strings, charlie_strings = p1_distribute(
            prepare_public_keys(key),
            channel(Stream.CHANNEL_AB, Party.ALICE, Party.BOB),
            channel(Stream.CHANNEL_AC, Party.ALICE, Party.CHARLIE),
        )

        forgeries = {}

        def forge(b, held, positions):
            if b != 1 - m:
                return None
            forgery, forward = forge_min_error(held, positions, n, bob, policy=strategy.policy)
            forgeries[b] = forgery
            return forward, forgery.kept

        bob_h, charlie_h = p1_symmetrize(
            bob_strings,
            charlie_strings,
            channel(Stream.CHANNEL_BC, Party.BOB, Party.CHARLIE),
            channel(Stream.CHANNEL_CB, Party.CHARLIE, Party.BOB),
            bob,
            charlie,
            intercept=forge if role is Role.FORGER_BOB else None,
        )
        p1_disclose(bob_h, charlie_h, transcript)

        reports = []
        for b in (0, 1):
            for holdings, party_rng in ((bob_h, bob), (charlie_h, charlie)):
                declared = key.for_recipient(holdings.party)[b]
                report = p1_test(
                    declared,
                    holdings.keys[b],
                    params,
                    alice_rng=alice,
                    recipient_rng=party_rng,
                    recipient=holdings.party,
                    b=b,
                    transcript=transcript,
                )
                if holdings.party is Party.BOB and b in forgeries:
                    forgeries[b].learn(report.revealed, declared[report.revealed])
                reports.append(report)

        test_records = [r.to_record() for r in reports]
        # a forging Bob never aborts on his own TEST
        honest_reports = [
            r for r in reports if not (role is Role.FORGER_BOB and r.recipient is Party.BOB)
        ]
        if any(r.aborted for r in honest_reports):
            return TrialResult(
                protocol=self.name,
                n=n,
                role=role,
                outcome=classify(role, aborted=True, bob=None, charlie=None),
                aborted=True,
                abort_reason="TEST",
                message=m,
                test_reports=test_records,
            )

        sig = p1_sign(key, m)
        if role in (Role.REPUDIATOR_ALICE, Role.SPLIT_KEY_ALICE):
            if role is Role.SPLIT_KEY_ALICE and strategy.budget is None:
                budget = 0
            else:
                noise = float(np.mean([r.rate for r in reports])) / 2
                budget = strategy.resolve_budget(
                    self.budget_rule,
                    n,
                    s_a=params.s_a,
                    s_v=params.s_v,
                    visibility=(1 - params.test_fraction) / 2,
                    noise=noise,
                )
            sig = P1Signature(m, repudiate_budget(sig.chars, budget, alice, flip=strategy.flip))
        AuthChannel(Party.ALICE, Party.BOB, transcript, tag_length=params.tag_length).send(
            sig.chars, step="sign", kind="signature"
        )
        bob_records = bob_h.keys[m].records
        bob_verdict = p1_verify(bob_records, sig, params.s_a, n)

        claim = sig
        if role is Role.FORGER_BOB:
            claim = P1Signature(1 - m, forgeries[1 - m].declared.copy())
        AuthChannel(Party.BOB, Party.CHARLIE, transcript, tag_length=params.tag_length).send(
            claim.chars, step="dispute", kind="signature"
        )
        charlie_records = charlie_h.keys[claim.b].records
        ruling = p1_arbitrate(charlie_records, claim, params.s_v, n)

        counts = dict(
            bob=count_mismatches(sig.chars, bob_records),
            bob_records=len(bob_records),
            charlie=count_mismatches(claim.chars, charlie_records),
            charlie_records=len(charlie_records),
        )
        return TrialResult(
            protocol=self.name,
            n=n,
            role=role,
            outcome=classify(role, aborted=False, bob=bob_verdict, charlie=ruling),
            message=m,
            bob_verdict=bob_verdict,
            charlie_verdict=ruling,
            mismatch_counts=counts,
            test_reports=test_records,
        )


def p1_run(params: P1Params, strategy: Optional[Strategy] = None, seed: int = 0) -> TrialResult:
    """Runs a single audited P1 trial."""
    return P1Protocol(params).run_trial(strategy, Rng(seed))
