from .core import *

__all__ = [
    "Basis",
    "QandyChar",
    "Qandy",
    "QandyString",
    "MeasurementRecord",
    "MeasurementRecords",
    "Provenance",
    "prepare",
    "measure",
    "random_char",
    "mismatch",
    "mismatch_mask",
    "count_mismatches",
    "eliminated_characters",
    "hidden_state_audit",
    "referee_view",
]
