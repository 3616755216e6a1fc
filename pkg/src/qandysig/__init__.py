import logging

from qandysig.adversaries import Role, Strategy
from qandysig.channels import AuthChannel, PadStore, Party, QandyChannel, Transcript
from qandysig.errors import *
from qandysig.protocol_base import Arbitration, Outcome, ProtocolParams, TrialResult, Verdict
from qandysig.protocols import PROTOCOLS, build_protocol
from qandysig.qandy import Basis, QandyChar, QandyString, measure, prepare
from qandysig.rng import Rng

from ._version import __version__

logging.getLogger(__name__).addHandler(logging.NullHandler())
