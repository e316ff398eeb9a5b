"""Half-block stores: in-memory and append-only files.

A store holds blocks of any identity: its owner's chain plus the copies of
counterparties' halves it has seen. A second, different block at an
occupied (public key, sequence) slot is kept and flagged, never dropped:
it is fork evidence.

On-disk layout of :class:`FileStore` (one directory)::

    chains/<public key hex>.log   records of  length (4 BE) | encoded half-block
    index                         one line per record:
                                  "<public key hex> <seq> <offset> <block hash hex>\\n"

The logs are the source of truth. Opening a store rescans them and checks
every index line against the record at its offset; index lines missing
after a crash are re-appended.
"""

from __future__ import annotations

import enum
import os
import threading
from pathlib import Path
from typing import Iterator, Optional

from ..encoding import u32
from ..errors import DecodeError, InvalidEvidence, StaleTail, StorageCorruption
from .blocks import ZERO_HASH, HalfBlock


class Appended(enum.Enum):
    NEW = "new"
    DUPLICATE = "duplicate"  # identical block already present, nothing written
    CONFLICT = "conflict"    # different block at an occupied slot: stored and flagged


class MemoryStore:
    def __init__(self):
        self._lock = threading.RLock()
        self._slots: dict[bytes, dict[int, list[HalfBlock]]] = {}
        self._by_hash: dict[bytes, HalfBlock] = {}
        self._order: list[HalfBlock] = []
        self._conflicts: list[tuple[bytes, int]] = []

    # -- writes -------------------------------------------------------------
    def append(self, block: HalfBlock, *, own: bool = False) -> Appended:
        """Add a block. ``own=True`` is for the chain's writer: the block must extend the tail."""
        if not block.signature_ok():
            raise InvalidEvidence("refusing to store a block whose signature does not verify")
        with self._lock:
            if block.hash in self._by_hash:
                return Appended.DUPLICATE
            if own:
                tail = self.tail(block.public_key)
                want_seq = tail.sequence_number + 1 if tail else 1
                want_prev = tail.hash if tail else ZERO_HASH
                if block.sequence_number != want_seq or block.previous_hash != want_prev:
                    raise StaleTail(f"block {block.sequence_number} does not extend the tail")
            slot = self._slots.setdefault(block.public_key, {}).setdefault(block.sequence_number, [])
            status = Appended.CONFLICT if slot else Appended.NEW
            self._persist(block)
            slot.append(block)
            self._by_hash[block.hash] = block
            self._order.append(block)
            if status is Appended.CONFLICT:
                self._conflicts.append((block.public_key, block.sequence_number))
            return status

    def _persist(self, block: HalfBlock) -> None:
        pass

    def discard_from(self, public_key: bytes, sequence_number: int) -> list[HalfBlock]:
        """Forget this store's copy of a chain from ``sequence_number`` on.

        Only adversarial simulations use this (whitewashing); other holders'
        copies are unaffected.
        """
        with self._lock:
            slots = self._slots.get(public_key, {})
            gone = [b for s in sorted(slots) if s >= sequence_number for b in slots[s]]
            for s in [s for s in slots if s >= sequence_number]:
                del slots[s]
            hashes = {b.hash for b in gone}
            for h in hashes:
                self._by_hash.pop(h, None)
            self._order = [b for b in self._order if b.hash not in hashes]
            return gone

    # -- reads --------------------------------------------------------------
    def get(self, public_key: bytes, sequence_number: int) -> Optional[HalfBlock]:
        with self._lock:
            slot = self._slots.get(public_key, {}).get(sequence_number)
            return slot[0] if slot else None

    def get_all(self, public_key: bytes, sequence_number: int) -> list[HalfBlock]:
        with self._lock:
            return list(self._slots.get(public_key, {}).get(sequence_number, []))

    def by_hash(self, block_hash: bytes) -> Optional[HalfBlock]:
        with self._lock:
            return self._by_hash.get(block_hash)

    def tail(self, public_key: bytes) -> Optional[HalfBlock]:
        with self._lock:
            slots = self._slots.get(public_key)
            if not slots:
                return None
            return slots[max(slots)][0]

    def chain(self, public_key: bytes) -> list[HalfBlock]:
        """First-stored block of every occupied slot, by sequence number."""
        with self._lock:
            slots = self._slots.get(public_key, {})
            return [slots[s][0] for s in sorted(slots)]

    def blocks(self) -> list[HalfBlock]:
        """Every stored block including flagged conflicts, in append order."""
        with self._lock:
            return list(self._order)

    def public_keys(self) -> list[bytes]:
        with self._lock:
            return sorted(k for k, v in self._slots.items() if v)

    def conflicts(self) -> list[tuple[bytes, int]]:
        with self._lock:
            return list(self._conflicts)

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self) -> Iterator[HalfBlock]:
        return iter(self.blocks())


class FileStore(MemoryStore):
    def __init__(self, path: str | os.PathLike, *, fsync: bool = False):
        super().__init__()
        self.path = Path(path)
        self.fsync = fsync
        (self.path / "chains").mkdir(parents=True, exist_ok=True)
        self._offsets: dict[bytes, int] = {}
        self._loading = True
        self._load()
        self._loading = False

    def _log_path(self, public_key: bytes) -> Path:
        return self.path / "chains" / f"{public_key.hex()}.log"

    def _write(self, path: Path, data: bytes) -> None:
        with open(path, "ab") as fh:
            fh.write(data)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())

    def _persist(self, block: HalfBlock) -> None:
        if self._loading:
            return
        log = self._log_path(block.public_key)
        offset = log.stat().st_size if log.exists() else 0
        self._write(log, u32(len(block.encode())) + block.encode())
        self._write(self.path / "index", self._index_line(block, offset))

    @staticmethod
    def _index_line(block: HalfBlock, offset: int) -> bytes:
        return (f"{block.public_key.hex()} {block.sequence_number} {offset} {block.hash.hex()}\n"
                .encode("ascii"))

    def _scan(self, log: Path) -> list[tuple[int, HalfBlock]]:
        data = log.read_bytes()
        out = []
        pos = 0
        while pos < len(data):
            if pos + 4 > len(data):
                raise StorageCorruption(f"{log.name}: truncated record header at {pos}")
            n = int.from_bytes(data[pos:pos + 4], "big")
            if pos + 4 + n > len(data):
                raise StorageCorruption(f"{log.name}: truncated record at {pos}")
            try:
                block = HalfBlock.decode(data[pos + 4:pos + 4 + n])
            except DecodeError as exc:
                raise StorageCorruption(f"{log.name}: undecodable record at {pos}: {exc}") from None
            if log.stem != block.public_key.hex():
                raise StorageCorruption(f"{log.name}: record at {pos} belongs to another key")
            out.append((pos, block))
            pos += 4 + n
        return out

    def _load(self) -> None:
        records: dict[tuple[str, int], HalfBlock] = {}
        for log in sorted((self.path / "chains").glob("*.log")):
            for offset, block in self._scan(log):
                records[(log.stem, offset)] = block
        index_path = self.path / "index"
        indexed: list[tuple[str, int]] = []
        if index_path.exists():
            for n, line in enumerate(index_path.read_text("ascii").splitlines(), 1):
                try:
                    key_hex, seq, offset, hash_hex = line.split(" ")
                    key = (key_hex, int(offset))
                except ValueError:
                    raise StorageCorruption(f"index line {n} unparseable") from None
                block = records.get(key)
                if block is None or block.hash.hex() != hash_hex or block.sequence_number != int(seq):
                    raise StorageCorruption(f"index line {n} does not match the log")
                indexed.append(key)
        seen = set(indexed)
        missing = [k for k in records if k not in seen]
        for key in indexed + missing:
            block = records[key]
            if not block.signature_ok():
                raise StorageCorruption(f"stored block {block.hash.hex()[:16]} has a bad signature")
            super().append(block)
        for key in missing:
            self._write(index_path, self._index_line(records[key], key[1]))
