"""
Experiment plans and their configuration.

A plan is resolved from three layers, later ones taking precedence: the built-in
defaults, a JSON configuration file whose keys mirror the command-line flags (with
underscores), and the flags given explicitly."""

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from qandysig._version import __version__
from qandysig.adversaries import Strategy
from qandysig.errors import ParameterError
from qandysig.protocol_base import ProtocolParams
from qandysig.protocols import PROTOCOLS, build_protocol
from qandysig.rng import RNG_ALGORITHM

__all__ = [
    "ExperimentPlan",
    "DEFAULT_GRID",
    "canonical_json",
    "load_config",
    "parse_grid",
    "resolve_plan",
]

DEFAULT_GRID = (64, 128, 256, 512)


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def parse_grid(grid: Union[str, int, Sequence[int]]) -> Tuple[int, ...]:
    """ Parses a grid of key lengths.

    Examples
    --------
    >>> parse_grid("64,128")
    (64, 128)
    >>> parse_grid(256)
    (256,)"""
    if isinstance(grid, str):
        try:
            return tuple(int(item) for item in grid.split(",") if item.strip())
        except ValueError:
            raise ParameterError(f"`n` must be a comma-separated list of integers, got {grid!r}")
    if isinstance(grid, int):
        return (grid,)
    return tuple(int(item) for item in grid)


@dataclass(frozen=True)
class ExperimentPlan:
    """ A Monte Carlo experiment: one protocol and strategy, ``trials`` trials at each
    key length of ``n``.

    The strategy fields (``budget`` through ``guesses``) and protocol fields
    (``s_a`` through ``tag_length``) are passed on to
    :class:`~qandysig.adversaries.Strategy` and
    :class:`~qandysig.protocol_base.ProtocolParams`.

    Raises
    ------
    ParameterError
        Unknown protocol, ``trials < 1``, a grid that is not strictly increasing, or
        any parameter the protocol or strategy rejects."""

    protocol: str = "p1"
    strategy: str = "honest"
    n: Tuple[int, ...] = DEFAULT_GRID
    trials: int = 10000
    seed: int = 0

    # strategy
    budget: Optional[int] = None
    budget_rule: Optional[str] = None
    policy: str = "min-error"
    flip: str = "value"
    identical: bool = False
    guesses: int = 1

    # protocol
    s_a: Optional[float] = None
    s_v: Optional[float] = None
    p_channel: float = 0.0
    eps_delta: float = 0.05
    test_fraction: float = 0.2
    p_e: float = 0.0
    p_f: float = 0.125
    hash: str = "sha256"
    qkd_n_sent: Optional[int] = None
    tag_length: int = 64

    def __post_init__(self):
        object.__setattr__(self, "n", parse_grid(self.n))
        if self.protocol not in PROTOCOLS:
            raise ParameterError(
                f"unknown protocol {self.protocol!r}; "
                f"expected one of {', '.join(sorted(PROTOCOLS))}"
            )
        if self.trials < 1:
            raise ParameterError(f"`trials` must be at least 1, got {self.trials}")
        if not self.n:
            raise ParameterError("the grid of key lengths `n` is empty")
        if any(a >= b for a, b in zip(self.n, self.n[1:])):
            raise ParameterError(f"the grid `n` must be strictly increasing, got {self.n}")

        strategy = self.strategy_spec()
        protocol = build_protocol(self.protocol, self.params_for(self.n[0]))
        if strategy.role not in protocol.roles:
            raise ParameterError(
                f"protocol {self.protocol!r} does not support the {strategy.role} strategy"
            )
        for n in self.n[1:]:
            build_protocol(self.protocol, self.params_for(n))

    def strategy_spec(self) -> Strategy:
        return Strategy.from_name(
            self.strategy,
            budget=self.budget,
            budget_rule=self.budget_rule,
            policy=self.policy,
            flip=self.flip,
            identical=self.identical,
            guesses=self.guesses,
        )

    def params_for(self, n: int) -> ProtocolParams:
        return ProtocolParams(
            n=n,
            s_a=self.s_a,
            s_v=self.s_v,
            p_channel=self.p_channel,
            eps_delta=self.eps_delta,
            seed=self.seed,
            test_fraction=self.test_fraction,
            p_e=self.p_e,
            p_f=self.p_f,
            hash=self.hash,
            qkd_n_sent=self.qkd_n_sent,
            tag_length=self.tag_length,
        )

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["n"] = list(self.n)
        return out

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of the resolved plan."""
        return hashlib.sha256(canonical_json(self.to_dict()).encode("utf-8")).hexdigest()

    def provenance(self) -> Dict[str, Any]:
        """The header embedded in every output of this plan."""
        return dict(
            version=__version__,
            seed=self.seed,
            config_hash=self.config_hash(),
            rng=RNG_ALGORITHM,
        )

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ParameterError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**values)


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """ Reads a JSON configuration file.

    Keys may be spelled with dashes (as on the command line) or underscores.

    Raises
    ------
    ParameterError
        The file is not a JSON object."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ParameterError(f"{path} is not valid JSON: {e}")
    if not isinstance(doc, dict):
        raise ParameterError(f"{path} must hold a JSON object, got {type(doc).__name__}")
    return {key.replace("-", "_"): value for key, value in doc.items()}


def resolve_plan(
    config: Optional[Mapping[str, Any]] = None, flags: Optional[Mapping[str, Any]] = None
) -> ExperimentPlan:
    """ Merges defaults < ``config`` < ``flags`` into a validated plan.

    Examples
    --------
    >>> plan = resolve_plan({"trials": 10, "s_a": 0.04}, {"trials": 20, "s_v": 0.08})
    >>> plan.trials, plan.s_a, plan.s_v
    (20, 0.04, 0.08)"""
    values = {}  # type: Dict[str, Any]
    values.update(config or {})
    values.update(flags or {})
    return ExperimentPlan.from_dict(values)
