"""
Lamport one-time signatures for one-bit messages, with three-party arbitration.

Alice's private key is a pair of random n-bit strings ``(X_0, X_1)``; the public
verification key is ``(H, H(X_0), H(X_1))`` for a one-way function ``H``. The
signature of the bit ``m`` is ``X_m``. The arbiter settles a dispute by checking the
string Bob forwards against ``P_m``."""

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from qandysig._utils import as_bits, bits_to_hex
from qandysig.adversaries import Role, Strategy, repudiate_budget
from qandysig.channels import AuthChannel, Party, Transcript
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
from qandysig.schemes.scheme_base import OneTimeScheme

__all__ = [
    "OwfSpec",
    "LamportKeys",
    "VerificationKey",
    "LamportScheme",
    "LamportProtocol",
    "gen",
    "sign",
    "ver",
    "arbitrate",
    "brute_force",
    "security_game",
    "keys_to_json",
    "keys_from_json",
]

logger = logging.getLogger(__name__)

OWF_NAMES = ("sha256", "toy")


def _pack(n: int, bits: np.ndarray) -> bytes:
    return n.to_bytes(4, "big") + np.packbits(bits).tobytes()


@dataclass(frozen=True)
class OwfSpec:
    """ The one-way function ``H: {0,1}^n -> {0,1}^n``.

    Parameters
    ----------
    name : str, optional (default="sha256")
        ``"sha256"``
            SHA-256 in counter mode, truncated to ``n`` bits.
        ``"toy"``
            The first 8 bits of SHA-256, zero-padded to ``n`` bits. Preimages of
            this function are found after a few hundred guesses; use it to watch a
            forgery succeed.

    n : int, optional (default=256)
        Input and output length in bits."""

    name: str = "sha256"
    n: int = 256

    def __post_init__(self):
        if self.name not in OWF_NAMES:
            raise ParameterError(f"`name` must be one of {OWF_NAMES}, got {self.name!r}")
        if self.n < 1:
            raise ParameterError(f"`n` must be positive, got {self.n}")

    def __call__(self, x) -> np.ndarray:
        x = as_bits(x)
        if x.size != self.n:
            raise ParameterError(f"H expects {self.n} input bits, got {x.size}")
        data = _pack(self.n, x)
        if self.name == "toy":
            out = np.zeros(self.n, dtype=np.uint8)
            head = np.unpackbits(np.frombuffer(hashlib.sha256(data).digest()[:1], np.uint8))
            out[: min(8, self.n)] = head[: self.n]
            return out

        blocks = math.ceil(self.n / 256)
        digest = b"".join(
            hashlib.sha256(i.to_bytes(4, "big") + data).digest() for i in range(blocks)
        )
        return np.unpackbits(np.frombuffer(digest, dtype=np.uint8))[: self.n]


@dataclass(frozen=True, eq=False)
class VerificationKey:
    owf: OwfSpec
    p0: np.ndarray
    p1: np.ndarray

    def __getitem__(self, m: int) -> np.ndarray:
        return (self.p0, self.p1)[m]


class LamportKeys:
    """ A Lamport key pair: ``sk = (X_0, X_1)`` and ``vk = (H, P_0, P_1)``.

    The key pair signs at most once."""

    def __init__(self, owf: OwfSpec, x0, x1):
        self.owf = owf
        self.x0 = as_bits(x0).copy()
        self.x1 = as_bits(x1).copy()
        self.vk = VerificationKey(owf, owf(self.x0), owf(self.x1))
        self.used = False

    @property
    def n(self) -> int:
        return self.owf.n

    @property
    def sk(self):
        return self.x0, self.x1


def gen(n: int, rng: Rng, owf: Optional[OwfSpec] = None) -> LamportKeys:
    """ Generates a key pair with two independent uniform ``n``-bit secrets.

    Parameters
    ----------
    n : int

    rng : Rng

    owf : Optional[OwfSpec]
        Defaults to ``OwfSpec("sha256", n)``.

    Returns
    -------
    LamportKeys"""
    owf = OwfSpec("sha256", n) if owf is None else owf
    if owf.n != n:
        raise ParameterError(f"the one-way function has length {owf.n}, expected {n}")
    return LamportKeys(owf, rng.bits(n), rng.bits(n))


def _check_bit(m: int) -> int:
    if m not in (0, 1):
        raise ParameterError(f"messages are single bits, got {m!r}")
    return int(m)


def sign(keys: LamportKeys, m: int) -> np.ndarray:
    """ Returns ``X_m``.

    Raises
    ------
    KeyAlreadyUsed
        The key pair has already signed."""
    m = _check_bit(m)
    if keys.used:
        raise KeyAlreadyUsed("this Lamport key pair has already signed a message")
    keys.used = True
    return keys.sk[m].copy()


def ver(vk: VerificationKey, m: int, sigma) -> Verdict:
    """ ``ACC`` iff ``H(sigma) == P_m``."""
    m = _check_bit(m)
    sigma = as_bits(sigma)
    if sigma.size != vk.owf.n:
        return Verdict.REJ
    return Verdict.ACC if np.array_equal(vk.owf(sigma), vk[m]) else Verdict.REJ


def arbitrate(vk: VerificationKey, m: int, sigma_claimed) -> Arbitration:
    """ Settles a dispute over the bit ``m``: Alice is found dishonest iff the string
    Bob forwards hashes to ``P_m``."""
    if ver(vk, m, sigma_claimed) is Verdict.ACC:
        return Arbitration.ALICE_DISHONEST
    return Arbitration.BOB_DISHONEST


def brute_force(vk: VerificationKey, m: int, guesses: int, rng: Rng) -> Optional[np.ndarray]:
    """ Tries up to ``guesses`` uniformly random preimages of ``P_m``.

    Returns
    -------
    Optional[numpy.ndarray]
        The first guess that verifies, if any."""
    for i in range(guesses):
        guess = rng.bits(vk.owf.n)
        if ver(vk, m, guess) is Verdict.ACC:
            logger.debug("preimage of P_%d found after %d guesses", m, i + 1)
            return guess
    return None


def security_game(vk: VerificationKey, m: int, guesses: int, rng: Rng) -> bool:
    """ The one-time security game against a brute-force adversary.

    The adversary sees ``vk`` and wins if it outputs a signature of ``m`` that
    verifies, using at most ``guesses`` attempts.

    Returns
    -------
    bool
        ``True`` iff the adversary wins."""
    return brute_force(vk, m, guesses, rng) is not None


def keys_to_json(keys: LamportKeys) -> str:
    """ Serializes a key pair as hex JSON ``{n, H, X0, X1, P0, P1}``."""
    return json.dumps(
        dict(
            n=keys.n,
            H=keys.owf.name,
            X0=bits_to_hex(keys.x0),
            X1=bits_to_hex(keys.x1),
            P0=bits_to_hex(keys.vk.p0),
            P1=bits_to_hex(keys.vk.p1),
        ),
        sort_keys=True,
    )


def _hex_to_bits(text: str, n: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:n]


def keys_from_json(text: str) -> LamportKeys:
    """ The inverse of :func:`keys_to_json`.

    Raises
    ------
    ParameterError
        The stored public key does not match ``H`` of the stored secrets."""
    doc = json.loads(text)
    n = int(doc["n"])
    keys = LamportKeys(OwfSpec(doc["H"], n), _hex_to_bits(doc["X0"], n), _hex_to_bits(doc["X1"], n))
    if not (
        np.array_equal(keys.vk.p0, _hex_to_bits(doc["P0"], n))
        and np.array_equal(keys.vk.p1, _hex_to_bits(doc["P1"], n))
    ):
        raise ParameterError("the serialized public key does not match the secret key")
    return keys


class LamportScheme(OneTimeScheme):
    """The Lamport scheme in (Gen, Sign, Ver) form."""

    def __init__(self, owf_name: str = "sha256"):
        self.owf_name = owf_name

    def gen(self, n: int, rng: Rng):
        keys = gen(n, rng, OwfSpec(self.owf_name, n))
        return keys, keys.vk

    def sign(self, sk: LamportKeys, m: int) -> np.ndarray:
        return sign(sk, m)

    def ver(self, vk: VerificationKey, m: int, sigma) -> Verdict:
        return ver(vk, m, sigma)


@dataclass(frozen=True)
class LamportParams:
    n: int
    hash: str = "sha256"

    def __post_init__(self):
        OwfSpec(self.hash, self.n)


class LamportProtocol(Protocol):
    """ Lamport signatures played between Alice, Bob and the arbiter Charlie.

    The forger brute-forces a preimage of the public key of the bit Alice did not
    sign (``Strategy.guesses`` attempts). The repudiator flips ``budget`` bits
    (default 1) of her signature; since Bob and Charlie run the same check she
    cannot succeed."""

    name = "lamport"
    roles = frozenset({Role.HONEST, Role.FORGER_BOB, Role.REPUDIATOR_ALICE})

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "LamportProtocol":
        return cls(LamportParams(params.n, params.hash))

    def __call__(self, strategy: Strategy, rng: Rng, transcript: Transcript) -> TrialResult:
        alice, bob = rng.child(Stream.ALICE), rng.child(Stream.BOB)
        n = self.params.n
        keys = gen(n, alice, OwfSpec(self.params.hash, n))
        public = np.concatenate([keys.vk.p0, keys.vk.p1])
        for recipient in (Party.BOB, Party.CHARLIE):
            transcript.log(Party.ALICE, recipient, "public-key", public, step="publish")

        to_bob = AuthChannel(Party.ALICE, Party.BOB, transcript)
        to_charlie = AuthChannel(Party.BOB, Party.CHARLIE, transcript)

        m = alice.coin()
        sigma = sign(keys, m)
        if strategy.role is Role.REPUDIATOR_ALICE:
            budget = 1 if strategy.budget is None else strategy.budget
            sigma = repudiate_budget(sigma, budget, alice)
        sigma = to_bob.send(sigma, step="sign", kind="signature")
        bob_verdict = ver(keys.vk, m, sigma)

        claim_m, claim = m, sigma
        if strategy.role is Role.FORGER_BOB:
            claim_m = 1 - m
            found = brute_force(keys.vk, claim_m, strategy.guesses, bob)
            claim = bob.bits(n) if found is None else found
        to_charlie.send(claim, step="dispute", kind="signature")
        ruling = arbitrate(keys.vk, claim_m, claim)

        return TrialResult(
            protocol=self.name,
            n=n,
            role=strategy.role,
            outcome=classify(strategy.role, aborted=False, bob=bob_verdict, charlie=ruling),
            message=m,
            bob_verdict=bob_verdict,
            charlie_verdict=ruling,
        )
