from typing import Dict, Type

from qandysig.errors import ParameterError
from qandysig.protocol_base import Protocol, ProtocolParams
from qandysig.schemes import LamportProtocol, OtpsProtocol

from .p1 import P1Params, P1Protocol, p1_run
from .p2_awka import AwkaProtocol, P2AwkaParams, P2Protocol, Variant, awka_run, p2_run
from .qkd import QkdConfig, QkdMode, QkdResult, qkd_session

__all__ = [
    "PROTOCOLS",
    "build_protocol",
    "P1Params",
    "P1Protocol",
    "P2AwkaParams",
    "P2Protocol",
    "AwkaProtocol",
    "Variant",
    "QkdConfig",
    "QkdMode",
    "QkdResult",
    "qkd_session",
    "p1_run",
    "p2_run",
    "awka_run",
]

PROTOCOLS = {
    p.name: p for p in (LamportProtocol, OtpsProtocol, P1Protocol, P2Protocol, AwkaProtocol)
}  # type: Dict[str, Type[Protocol]]


def build_protocol(name: str, params: ProtocolParams) -> Protocol:
    """ Looks up a protocol by name and builds it from the shared parameter set.

    Raises
    ------
    ParameterError
        Unknown protocol name, or parameters the protocol rejects."""
    try:
        cls = PROTOCOLS[name]
    except KeyError:
        raise ParameterError(
            f"unknown protocol {name!r}; expected one of {', '.join(sorted(PROTOCOLS))}"
        )
    return cls.from_params(params)
