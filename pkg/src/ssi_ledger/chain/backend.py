"""One peer's view of the ledger, behind an interface both chain backends share.

Protocol code only talks to a backend: it appends its own halves, keeps
copies of counterparties' halves, and publishes finished entries. The
personal backend needs nothing beyond the local store. The proof-of-work
backend additionally mines every published entry into one shared global
chain, which is where an auditor reads it back.
"""

from __future__ import annotations

import random
from typing import Iterable, Optional

from .blocks import BlockPair, HalfBlock
from .pow import PowChain
from .store import Appended, MemoryStore


class PersonalBackend:
    kind = "personal"

    def __init__(self, store: MemoryStore | None = None):
        self.store = store if store is not None else MemoryStore()

    def tail(self, public_key: bytes) -> Optional[HalfBlock]:
        return self.store.tail(public_key)

    def get(self, public_key: bytes, sequence_number: int) -> Optional[HalfBlock]:
        return self.store.get(public_key, sequence_number)

    def by_hash(self, block_hash: bytes) -> Optional[HalfBlock]:
        return self.store.by_hash(block_hash)

    def chain(self, public_key: bytes) -> list[HalfBlock]:
        return self.store.chain(public_key)

    def add_own(self, block: HalfBlock) -> Appended:
        return self.store.append(block, own=True)

    def add_copy(self, block: HalfBlock) -> Appended:
        return self.store.append(block)

    def publish(self, blocks: Iterable[HalfBlock], now: int) -> None:
        """Make finished entries globally recorded. Personal chains need no extra step."""

    def publish_pair(self, pair: BlockPair, now: int) -> None:
        self.publish([pair.proposal, pair.agreement], now)

    def known_blocks(self) -> list[HalfBlock]:
        return self.store.blocks()


class PowBackend(PersonalBackend):
    """Local half-block store plus a shared proof-of-work chain that published entries are mined into."""

    kind = "pow"

    def __init__(self, chain: PowChain, store: MemoryStore | None = None, rng=None):
        super().__init__(store)
        self.global_chain = chain
        self.rng = rng if rng is not None else random.Random(0)

    def publish(self, blocks: Iterable[HalfBlock], now: int) -> None:
        blocks = [b for b in blocks if self.global_chain.entry(b.hash) is None]
        if blocks:
            self.global_chain.append(blocks, now, self.rng)

    def known_blocks(self) -> list[HalfBlock]:
        out = {b.hash: b for b in self.global_chain.entries()}
        for b in self.store.blocks():
            out.setdefault(b.hash, b)
        return list(out.values())


BACKENDS = ("personal", "pow")
