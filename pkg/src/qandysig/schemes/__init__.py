from .lamport import LamportProtocol, LamportScheme, OwfSpec
from .otps import OtpsParams, OtpsProtocol
from .scheme_base import OneTimeScheme

__all__ = [
    "OneTimeScheme",
    "LamportScheme",
    "LamportProtocol",
    "OwfSpec",
    "OtpsParams",
    "OtpsProtocol",
]
