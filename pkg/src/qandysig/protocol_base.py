"""
Defines the base class for three-party signature protocols, the verdict and outcome
vocabulary they share, and the classification of a finished trial."""

import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional

from qandysig._utils import check_even, check_fraction
from qandysig.adversaries import Role, Strategy
from qandysig.channels import Transcript
from qandysig.errors import (
    InsufficientSample,
    KeyTooShort,
    PadExhausted,
    ParameterError,
    QkdAbort,
)
from qandysig.qandy import hidden_state_audit
from qandysig.rng import Rng

__all__ = [
    "Verdict",
    "Arbitration",
    "Outcome",
    "ProtocolParams",
    "TrialResult",
    "Protocol",
    "classify",
]

logger = logging.getLogger(__name__)

# raised inside a trial script when an honest party stops the protocol
TRIAL_ABORTS = (QkdAbort, KeyTooShort, PadExhausted, InsufficientSample)


class Verdict(str, Enum):
    """A recipient's verification result."""

    ACC = "ACC"
    REJ = "REJ"

    def __str__(self) -> str:
        return self.value


class Arbitration(str, Enum):
    """ The arbiter's ruling in a dispute.

    Accepting the signature Bob forwards finds Alice dishonest; rejecting it finds
    Bob dishonest."""

    ACCEPT_BOB = "accept_bob"
    REJECT_BOB = "reject_bob"
    ALICE_DISHONEST = "accept_bob"
    BOB_DISHONEST = "reject_bob"

    def __str__(self) -> str:
        return self.value


class Outcome(str, Enum):
    HONEST_ACC = "honest_acc"
    HONEST_ABORT = "honest_abort"
    FORGE_SUCC = "forge_succ"
    FORGE_FAIL = "forge_fail"
    REPUD_SUCC = "repud_succ"
    REPUD_FAIL = "repud_fail"

    def __str__(self) -> str:
        return self.value


def classify(
    role: Role,
    *,
    aborted: bool,
    bob: Optional[Verdict],
    charlie: Optional[Arbitration],
) -> Outcome:
    """ Classifies a finished trial.

    Parameters
    ----------
    role : Role
        The dishonest party's role.

    aborted : bool
        Whether an honest party stopped the protocol.

    bob : Optional[Verdict]
        Bob's verification result (``None`` if the trial aborted before it).

    charlie : Optional[Arbitration]
        The arbiter's ruling on what Bob forwarded.

    Returns
    -------
    Outcome

    Examples
    --------
    >>> classify(Role.REPUDIATOR_ALICE, aborted=False, bob=Verdict.ACC,
    ...          charlie=Arbitration.REJECT_BOB)
    <Outcome.REPUD_SUCC: 'repud_succ'>"""
    role = Role(role)
    if role is Role.HONEST:
        if aborted or bob is not Verdict.ACC or charlie is not Arbitration.ACCEPT_BOB:
            return Outcome.HONEST_ABORT
        return Outcome.HONEST_ACC
    if role is Role.FORGER_BOB:
        if not aborted and charlie is Arbitration.ACCEPT_BOB:
            return Outcome.FORGE_SUCC
        return Outcome.FORGE_FAIL
    if not aborted and bob is Verdict.ACC and charlie is Arbitration.REJECT_BOB:
        return Outcome.REPUD_SUCC
    return Outcome.REPUD_FAIL


@dataclass(frozen=True)
class ProtocolParams:
    """ The parameters shared by every protocol; each protocol reads the ones it uses.

    Parameters
    ----------
    n : int
        Key length per message bit (qandies per public key for P1).

    s_a : Optional[float]
        Recipient threshold (P1, AWKA).

    s_v : Optional[float]
        Arbiter threshold (OTP-S, P1, P2, AWKA).

    p_channel : float, optional (default=0.0)
        Per-qandy flip probability of every qandy channel.

    eps_delta : float, optional (default=0.05)
        TEST confidence.

    seed : int, optional (default=0)
        Base seed of the run.

    test_fraction : float, optional (default=0.2)
        Fraction of records (or sifted bits) revealed in a TEST.

    p_e : float, optional (default=0.0)
        The honest mismatch rate the thresholds were designed for.

    p_f : float, optional (default=0.125)
        The mismatch rate a forger cannot avoid on the arbiter's key material.

    hash : str, optional (default="sha256")
        Lamport one-way function.

    qkd_n_sent : Optional[int]
        Qandies sent per QKD session; sized automatically when ``None``.

    tag_length : int, optional (default=64)
        Authentication tag cost per classical message, in key bits."""

    n: int
    s_a: Optional[float] = None
    s_v: Optional[float] = None
    p_channel: float = 0.0
    eps_delta: float = 0.05
    seed: int = 0
    test_fraction: float = 0.2
    p_e: float = 0.0
    p_f: float = 0.125
    hash: str = "sha256"
    qkd_n_sent: Optional[int] = None
    tag_length: int = 64

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"`n` must be positive, got {self.n}")
        check_fraction(self.p_channel, "p_channel", high=0.5, high_open=True)
        check_fraction(self.eps_delta, "eps_delta", low_open=True, high_open=True)
        check_fraction(self.test_fraction, "test_fraction", low_open=True, high_open=True)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TrialResult:
    """ Everything a protocol reports about one trial."""

    protocol: str
    n: int
    role: Role
    outcome: Outcome
    aborted: bool = False
    abort_reason: Optional[str] = None
    message: Optional[int] = None
    bob_verdict: Optional[Verdict] = None
    charlie_verdict: Optional[Arbitration] = None
    mismatch_counts: Dict[str, Any] = field(default_factory=dict)
    test_reports: List[Dict[str, Any]] = field(default_factory=list)
    qkd: List[Dict[str, Any]] = field(default_factory=list)
    qandies_sent: int = 0
    audit_clean: bool = True
    trial: int = 0
    seed: Optional[int] = None
    transcript: Optional[Transcript] = field(default=None, repr=False, compare=False)

    def to_record(self, params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """ The JSON-ready trial record.

        Parameters
        ----------
        params : Optional[Dict[str, Any]]
            Protocol parameters to embed (``s_a``, ``s_v``, ``p_channel``, ...)."""
        record = dict(params or {})
        record.update(
            protocol=self.protocol,
            n=self.n,
            seed=self.seed,
            trial=self.trial,
            strategy=str(self.role),
            outcome=str(self.outcome),
            aborted=self.aborted,
            abort_reason=self.abort_reason,
            message=self.message,
            bob_verdict=None if self.bob_verdict is None else str(self.bob_verdict),
            charlie_verdict=(
                None if self.charlie_verdict is None else str(self.charlie_verdict)
            ),
            mismatch_counts=self.mismatch_counts,
            test_reports=self.test_reports,
            audit_clean=self.audit_clean,
        )
        if self.qkd:
            record["qkd"] = self.qkd
            record["qandies_sent"] = self.qandies_sent
        return record


class Protocol:
    """ Base class for the signature protocols simulated by qandysig.

    A protocol instance holds validated parameters and runs trials: a trial is a
    sequential script over Alice, Bob and Charlie, driven by a
    :class:`~qandysig.adversaries.Strategy` that names the (at most one) dishonest
    party. A trial script is defined via ``Protocol.__call__``; callers use
    :meth:`run_trial`, which sets up the transcript, audits hidden-state reads and
    turns aborts raised by honest parties into an aborted result."""

    # the name used in trial records and on the command line
    name = None  # type: str

    # the strategies this protocol knows how to play
    roles = frozenset(Role)

    # default repudiation budget rule
    budget_rule = "gap"

    def __init__(self, params):
        self.params = params

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "Protocol":  # pragma: no cover
        """ Builds the protocol from the shared parameter set."""
        raise NotImplementedError

    def __call__(
        self, strategy: Strategy, rng: Rng, transcript: Transcript
    ) -> TrialResult:  # pragma: no cover
        """ Runs one trial script.

        Parameters
        ----------
        strategy : Strategy

        rng : Rng
            The trial's stream. Parties and channels draw from fixed child streams.

        transcript : Transcript
            Receives every message of the trial.

        Returns
        -------
        TrialResult

        Raises
        ------
        QkdAbort, KeyTooShort, PadExhausted, InsufficientSample
            An honest party stops the protocol."""
        raise NotImplementedError

    @property
    def n(self) -> int:
        return self.params.n

    def record_params(self) -> Dict[str, Any]:
        """The parameters embedded in this protocol's trial records."""
        return {
            k: v for k, v in asdict(self.params).items() if k not in ("n", "seed")
        }

    def run_trial(
        self, strategy: Optional[Strategy] = None, rng: Optional[Rng] = None, *, trial: int = 0
    ) -> TrialResult:
        """ Runs one audited trial.

        Parameters
        ----------
        strategy : Optional[Strategy]
            Defaults to every party being honest.

        rng : Optional[Rng]
            Defaults to ``Rng(trial)``.

        trial : int, optional (default=0)

        Returns
        -------
        TrialResult
            With ``audit_clean`` set iff no hidden qandy state was read."""
        strategy = Strategy() if strategy is None else strategy
        rng = Rng(trial) if rng is None else rng
        if strategy.role not in self.roles:
            raise ParameterError(
                f"protocol {self.name!r} does not support the {strategy.role} strategy"
            )

        transcript = Transcript(trial)
        with hidden_state_audit() as reads:
            try:
                result = self(strategy, rng, transcript)
            except TRIAL_ABORTS as e:
                logger.debug("%s trial %d aborted: %s", self.name, trial, e)
                result = TrialResult(
                    protocol=self.name,
                    n=self.n,
                    role=strategy.role,
                    outcome=classify(strategy.role, aborted=True, bob=None, charlie=None),
                    aborted=True,
                    abort_reason=type(e).__name__,
                )
        return replace(
            result,
            audit_clean=not reads,
            trial=trial,
            seed=rng.seed,
            transcript=transcript,
        )


def check_thresholds(p_e: float, s_a: float, s_v: float, p_f: float):
    """ Enforces ``0 <= p_e < s_a < s_v < p_f``.

    Raises
    ------
    ParameterError"""
    for value, name in ((p_e, "p_e"), (s_a, "s_a"), (s_v, "s_v"), (p_f, "p_f")):
        check_fraction(value, name)
    if not p_e < s_a < s_v < p_f:
        raise ParameterError(
            f"thresholds must satisfy 0 <= p_e < s_a < s_v < p_f, got "
            f"p_e={p_e}, s_a={s_a}, s_v={s_v}, p_f={p_f}"
        )


def check_key_length(n: int) -> int:
    return check_even(n, "n")
