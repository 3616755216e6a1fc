""" A naive model of qandy ownership, used as the reference for the handle API."""

from typing import Dict, Optional, Set, Tuple


class Ledger:
    """ Tracks which uids each handle holds and which uids were ever measured."""

    def __init__(self):
        self.holdings = {}  # type: Dict[int, Optional[Tuple[int, ...]]]
        self.measured = set()  # type: Set[int]

    def add(self, key: int, uids):
        uids = tuple(int(u) for u in uids)
        for other in self.holdings.values():
            assert other is None or not set(other) & set(uids), "a uid has two owners"
        self.holdings[key] = uids

    def is_live(self, key: int) -> bool:
        return self.holdings[key] is not None

    def consume(self, key: int) -> Tuple[int, ...]:
        uids = self.holdings[key]
        assert uids is not None, "the ledger consumed a handle twice"
        self.holdings[key] = None
        return uids

    def measure(self, key: int) -> Tuple[int, ...]:
        uids = self.consume(key)
        assert not set(uids) & self.measured, "a uid was measured twice"
        self.measured.update(uids)
        return uids

    def live_uids(self):
        return [uids for uids in self.holdings.values() if uids is not None]
