"""Single global proof-of-work chain carrying the same signed half-blocks.

Block header (89 bytes, hashed for the work check)::

    height (8 BE) | previous_hash (32) | timestamp (8 BE) | difficulty (1)
    | body_digest (32) | nonce (8 BE)

Body: count (4 BE) then count x (length (4 BE) | encoded half-block).
body_digest = SHA-256(body). Height starts at 1; the first block's
previous_hash is all zeros. Ordering comes from height, so the
per-identity sequence checks of personal chains do not apply here.
"""

from __future__ import annotations

import hashlib
import os
import threading
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

from ..encoding import Reader, u8, u32, u64
from ..errors import DecodeError, StorageCorruption
from .blocks import ZERO_HASH, HalfBlock
from .personal import Violation

MAX_DIFFICULTY = 24


def leading_zero_bits(digest: bytes) -> int:
    n = int.from_bytes(digest, "big")
    return len(digest) * 8 - n.bit_length()


def encode_body(entries: Iterable[HalfBlock]) -> bytes:
    entries = list(entries)
    out = [u32(len(entries))]
    for e in entries:
        raw = e.encode()
        out += [u32(len(raw)), raw]
    return b"".join(out)


@dataclass(frozen=True)
class PowBlock:
    height: int
    previous_hash: bytes
    timestamp: int
    difficulty: int
    entries: tuple[HalfBlock, ...]
    nonce: int = 0
    body_digest: bytes = b""

    def header(self) -> bytes:
        return (u64(self.height) + self.previous_hash + u64(self.timestamp) + u8(self.difficulty)
                + self.body_digest + u64(self.nonce))

    @cached_property
    def hash(self) -> bytes:
        return hashlib.sha256(self.header()).digest()

    def encode(self) -> bytes:
        return self.header() + encode_body(self.entries)

    @classmethod
    def decode(cls, data: bytes) -> "PowBlock":
        r = Reader(data)
        height, prev, ts, diff = r.u64(), r.take(32), r.u64(), r.u8()
        digest, nonce = r.take(32), r.u64()
        entries = tuple(HalfBlock.decode(r.lp32()) for _ in range(r.u32()))
        r.done()
        return cls(height, prev, ts, diff, entries, nonce, digest)

    def problems(self) -> list[str]:
        out = []
        if hashlib.sha256(encode_body(self.entries)).digest() != self.body_digest:
            out.append("body does not match header digest")
        if leading_zero_bits(self.hash) < self.difficulty:
            out.append(f"header hash has fewer than {self.difficulty} leading zero bits")
        for e in self.entries:
            if not e.signature_ok():
                out.append(f"entry {e.hash.hex()[:16]} has a bad signature")
        return out


def mine(height: int, previous_hash: bytes, timestamp: int, difficulty: int,
         entries: Iterable[HalfBlock], rng) -> PowBlock:
    """Search nonces upward from a seeded start until the header hash has enough zero bits."""
    if not 0 <= difficulty <= MAX_DIFFICULTY:
        raise ValueError(f"difficulty must be in [0, {MAX_DIFFICULTY}]")
    entries = tuple(entries)
    digest = hashlib.sha256(encode_body(entries)).digest()
    template = PowBlock(height, previous_hash, timestamp, difficulty, entries, 0, digest)
    prefix = template.header()[:-8]
    nonce = rng.getrandbits(64)
    while True:
        h = hashlib.sha256(prefix + u64(nonce)).digest()
        if leading_zero_bits(h) >= difficulty:
            return replace(template, nonce=nonce)
        nonce = (nonce + 1) & 0xFFFFFFFFFFFFFFFF


def validate_pow_chain(blocks: Iterable[PowBlock]) -> list[Violation]:
    out = []
    prev: Optional[PowBlock] = None
    for b in blocks:
        for p in b.problems():
            out.append(Violation(b.height, p))
        want_height = prev.height + 1 if prev else 1
        want_prev = prev.hash if prev else ZERO_HASH
        if b.height != want_height:
            out.append(Violation(b.height, f"expected height {want_height}"))
        if b.previous_hash != want_prev:
            out.append(Violation(b.height, "previous hash does not match"))
        prev = b
    return out


def detect_pow_fork(a: PowBlock, b: PowBlock) -> bool:
    return (a.height == b.height and a.hash != b.hash and not a.problems() and not b.problems())


class PowChain:
    """The global chain, optionally persisted as an append-only file of length-prefixed blocks."""

    def __init__(self, difficulty: int = 8, path: str | os.PathLike | None = None):
        if not 0 <= difficulty <= MAX_DIFFICULTY:
            raise ValueError(f"difficulty must be in [0, {MAX_DIFFICULTY}]")
        self.difficulty = difficulty
        self.path = Path(path) if path else None
        self._lock = threading.RLock()
        self.blocks: list[PowBlock] = []
        self._entries: dict[bytes, HalfBlock] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        data = self.path.read_bytes()
        r = Reader(data)
        try:
            while r.remaining():
                self._index(PowBlock.decode(r.lp32()))
        except DecodeError as exc:
            raise StorageCorruption(f"pow chain file: {exc}") from None
        bad = validate_pow_chain(self.blocks)
        if bad:
            raise StorageCorruption(f"pow chain file: {bad[0]}")

    def _index(self, block: PowBlock) -> None:
        self.blocks.append(block)
        for e in block.entries:
            self._entries.setdefault(e.hash, e)

    @property
    def tip(self) -> Optional[PowBlock]:
        return self.blocks[-1] if self.blocks else None

    def append(self, entries: Iterable[HalfBlock], now: int, rng) -> PowBlock:
        with self._lock:
            tip = self.tip
            block = mine(tip.height + 1 if tip else 1, tip.hash if tip else ZERO_HASH, now,
                         self.difficulty, entries, rng)
            self._index(block)
            if self.path:
                raw = block.encode()
                with open(self.path, "ab") as fh:
                    fh.write(u32(len(raw)) + raw)
            return block

    def entries(self) -> list[HalfBlock]:
        with self._lock:
            return [e for b in self.blocks for e in b.entries]

    def entry(self, block_hash: bytes) -> Optional[HalfBlock]:
        return self._entries.get(block_hash)


def pow_append(chain: PowChain, entries: Iterable[HalfBlock], now: int, rng,
               difficulty: int | None = None) -> PowBlock:
    if difficulty is not None and difficulty != chain.difficulty:
        chain.difficulty = difficulty
    return chain.append(entries, now, rng)
