"""
OTP-S over qandy key distribution.

``P2`` establishes every pad of OTP-S with a full (TEST, EC and PA) session and keeps
the zero-tolerance checks of OTP-S. ``AWKA`` skips error correction and privacy
amplification for Alice's keys: the test-only keys Alice shares with Bob and with
Charlie serve directly as ``X^B`` and ``X^C``, and verification and arbitration
tolerate mismatch fractions below ``s_a`` and ``s_v``. Symmetrization needs a
noiseless channel, so Bob and Charlie still run a full session."""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

from qandysig._utils import check_fraction
from qandysig.adversaries import Role, Strategy
from qandysig.channels import PadStore, Party, QandyChannel, Transcript
from qandysig.errors import ParameterError
from qandysig.protocol_base import (
    Protocol,
    ProtocolParams,
    TrialResult,
    check_key_length,
    check_thresholds,
    classify,
)
from qandysig.protocols.qkd import QkdConfig, QkdMode, QkdResult, qkd_session
from qandysig.rng import Rng, Stream
from qandysig.schemes.otps import (
    AliceKeys,
    OtpsKeys,
    RecipientKeys,
    otps_distribute,
    otps_keygen,
    pad_budget,
    signature_phase,
)

__all__ = ["Variant", "P2AwkaParams", "P2Protocol", "AwkaProtocol", "p2_run", "awka_run"]

logger = logging.getLogger(__name__)

_STREAMS = {
    frozenset((Party.ALICE, Party.BOB)): (Stream.QKD_AB, Stream.CHANNEL_AB),
    frozenset((Party.ALICE, Party.CHARLIE)): (Stream.QKD_AC, Stream.CHANNEL_AC),
    frozenset((Party.BOB, Party.CHARLIE)): (Stream.QKD_BC, Stream.CHANNEL_BC),
}


class Variant(str, Enum):
    P2 = "p2"
    AWKA = "awka"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class P2AwkaParams:
    """ Parameters of P2 and AWKA.

    Parameters
    ----------
    n : int
        Signature key length per message bit; even.

    variant : Variant

    s_v : float
        Arbiter threshold, below 1/4.

    s_a : Optional[float]
        Recipient threshold; AWKA only (P2 accepts nothing but a perfect match).

    qkd : QkdConfig, optional
        Template for every session; mode and direction are set per session.

    p_channel : float, optional (default=0.0)

    p_e : float, optional (default=0.0)
        The honest mismatch rate AWKA's thresholds were designed for.

    tag_length : int, optional (default=64)"""

    n: int
    variant: Variant
    s_v: float
    s_a: Optional[float] = None
    qkd: QkdConfig = field(default_factory=QkdConfig)
    p_channel: float = 0.0
    p_e: float = 0.0
    tag_length: int = 64

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        check_key_length(self.n)
        check_fraction(self.p_channel, "p_channel", high=0.5, high_open=True)
        if self.variant is Variant.P2:
            if self.s_a is not None:
                raise ParameterError("P2 has no recipient threshold; `s_a` must not be set")
            check_fraction(self.s_v, "s_v", high=0.25, low_open=True, high_open=True)
        else:
            if self.s_a is None:
                raise ParameterError("AWKA needs the recipient threshold `s_a`")
            check_thresholds(self.p_e, self.s_a, self.s_v, 0.25)


def _session(
    params: P2AwkaParams,
    mode: QkdMode,
    sender: Party,
    receiver: Party,
    required: int,
    rng: Rng,
    transcript: Transcript,
) -> QkdResult:
    session_stream, channel_stream = _STREAMS[frozenset((sender, receiver))]
    channel = QandyChannel(
        params.p_channel,
        rng.child(channel_stream),
        sender=sender,
        receiver=receiver,
        transcript=transcript,
    )
    config = replace(params.qkd, mode=mode).between(sender, receiver)
    return qkd_session(config, channel, rng.child(session_stream), transcript, required=required)


def _party_key(result: QkdResult, party: Party):
    return result.key_sender if party is result.sender else result.key_receiver


def _install(pads: PadStore, result: QkdResult, size: int):
    pads.install(
        result.sender,
        result.receiver,
        result.key_sender[:size],
        result.key_receiver[:size],
    )


def _result(
    protocol: Protocol, strategy: Strategy, phase, sessions: List[QkdResult]
) -> TrialResult:
    return TrialResult(
        protocol=protocol.name,
        n=protocol.n,
        role=strategy.role,
        outcome=classify(strategy.role, aborted=False, bob=phase.bob_verdict, charlie=phase.ruling),
        message=phase.message,
        bob_verdict=phase.bob_verdict,
        charlie_verdict=phase.ruling,
        mismatch_counts=phase.mismatch_counts,
        qkd=[s.summary() for s in sessions],
        qandies_sent=sum(s.n_sent for s in sessions),
    )


def _from_params(cls, params: ProtocolParams, variant: Variant):
    if params.s_v is None:
        raise ParameterError(f"{variant} needs the arbiter threshold `s_v`")
    qkd = QkdConfig(
        n_sent=params.qkd_n_sent,
        test_fraction=params.test_fraction,
        eps_delta=params.eps_delta,
    )
    return cls(
        P2AwkaParams(
            n=params.n,
            variant=variant,
            s_v=params.s_v,
            s_a=params.s_a if variant is Variant.AWKA else None,
            qkd=qkd,
            p_channel=params.p_channel,
            p_e=params.p_e,
            tag_length=params.tag_length,
        )
    )


class P2Protocol(Protocol):
    """ OTP-S with every pad established by a full key distribution session.

    Alice sends in the Alice-Bob and Alice-Charlie sessions, Bob in the Bob-Charlie
    session. A session aborts the whole trial."""

    name = "p2"
    roles = frozenset({Role.HONEST, Role.FORGER_BOB, Role.REPUDIATOR_ALICE})
    budget_rule = "threshold"

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "P2Protocol":
        return _from_params(cls, params, Variant.P2)

    def __call__(self, strategy: Strategy, rng: Rng, transcript: Transcript) -> TrialResult:
        params = self.params
        pads = PadStore(transcript)
        sessions = []
        for (a, b), size in pad_budget(params.n, params.tag_length).items():
            result = _session(params, QkdMode.FULL, a, b, size, rng, transcript)
            _install(pads, result, size)
            sessions.append(result)

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
        return _result(self, strategy, phase, sessions)


class AwkaProtocol(Protocol):
    """ OTP-S over test-only keys with thresholded checks.

    Bob and Charlie are the senders of their sessions with Alice; the key Alice
    ends up with is ``X^B`` (``X^C``) and the recipient's own copy differs from it
    at a rate close to the session's error rate. A repudiating Alice aims both
    recipients' expected mismatch fraction at ``(s_a + s_v) / 2``, net of the
    Alice-Charlie error rate she estimated."""

    name = "awka"
    roles = frozenset({Role.HONEST, Role.FORGER_BOB, Role.REPUDIATOR_ALICE})
    budget_rule = "midpoint"

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "AwkaProtocol":
        return _from_params(cls, params, Variant.AWKA)

    def __call__(self, strategy: Strategy, rng: Rng, transcript: Transcript) -> TrialResult:
        params = self.params
        n = params.n
        with_bob = _session(
            params, QkdMode.TEST_ONLY, Party.BOB, Party.ALICE, 2 * n, rng, transcript
        )
        with_charlie = _session(
            params, QkdMode.TEST_ONLY, Party.CHARLIE, Party.ALICE, 2 * n, rng, transcript
        )
        bc_size = pad_budget(n, params.tag_length)[(Party.BOB, Party.CHARLIE)]
        bc = _session(params, QkdMode.FULL, Party.BOB, Party.CHARLIE, bc_size, rng, transcript)

        pads = PadStore(transcript)
        _install(pads, bc, bc_size)

        def rows(result, party):
            return _party_key(result, party)[: 2 * n].reshape(2, n)

        keys = OtpsKeys(
            AliceKeys(rows(with_bob, Party.ALICE), rows(with_charlie, Party.ALICE)),
            RecipientKeys(Party.BOB, rows(with_bob, Party.BOB)),
            RecipientKeys(Party.CHARLIE, rows(with_charlie, Party.CHARLIE)),
        )
        phase = signature_phase(
            keys,
            pads,
            strategy,
            rng,
            transcript,
            s_v=params.s_v,
            s_a=params.s_a,
            budget_rule=self.budget_rule,
            noise=with_charlie.qber,
            tag_length=params.tag_length,
        )
        return _result(self, strategy, phase, [with_bob, with_charlie, bc])


def p2_run(params: P2AwkaParams, strategy: Optional[Strategy] = None, seed: int = 0) -> TrialResult:
    """ Runs a single audited P2 trial."""
    if params.variant is not Variant.P2:
        raise ParameterError(f"p2_run needs the P2 variant, got {params.variant}")
    return P2Protocol(params).run_trial(strategy, Rng(seed))


def awka_run(params: P2AwkaParams, strategy: Optional[Strategy] = None, seed: int = 0) -> TrialResult:
    """ Runs a single audited AWKA trial."""
    if params.variant is not Variant.AWKA:
        raise ParameterError(f"awka_run needs the AWKA variant, got {params.variant}")
    return AwkaProtocol(params).run_trial(strategy, Rng(seed))
