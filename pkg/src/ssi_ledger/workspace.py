"""A peer's on-disk home: identity seed, half-block store and protocol state.

Layout under the store directory::

    identity      hex seed, one line
    chain/        FileStore (per-key logs plus index)
    state.json    claims, witnesses, attestation bookkeeping, peers

Blocks are referenced from state.json by hash and resolved against the
store on load, so the JSON never duplicates signed data.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from .audit import Presentation, SnapshotReceipt
from .chain import BlockPair, FileStore, HalfBlock, PersonalBackend
from .claims import Claim, ClaimMetadata
from .errors import IdentityExists, NoIdentity, StorageCorruption
from .identity import KeyPair, generate_identity
from .proofs import Witness
from .protocol import OwnedClaim, Peer

STATE_VERSION = 1


class Workspace:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    @property
    def identity_path(self) -> Path:
        return self.path / "identity"

    @property
    def state_path(self) -> Path:
        return self.path / "state.json"

    def create_identity(self, seed: bytes) -> KeyPair:
        if self.identity_path.exists():
            raise IdentityExists(str(self.identity_path))
        key = generate_identity(seed)
        self.path.mkdir(parents=True, exist_ok=True)
        self.identity_path.write_text(seed.hex() + "\n")
        return key

    def identity(self) -> KeyPair:
        try:
            text = self.identity_path.read_text().strip()
        except FileNotFoundError:
            raise NoIdentity(f"no identity in {self.path}") from None
        try:
            return generate_identity(bytes.fromhex(text))
        except ValueError:
            raise StorageCorruption("identity file is not a hex seed") from None

    # -- peer state ----------------------------------------------------------
    def open_peer(self, rng=None) -> Peer:
        key = self.identity()
        backend = PersonalBackend(FileStore(self.path / "chain"))
        peer = Peer(key, backend, rng=rng, name="self")
        if self.state_path.exists():
            _load_state(peer, json.loads(self.state_path.read_text()))
        return peer

    def book(self) -> dict[bytes, str]:
        if not self.state_path.exists():
            return {}
        data = json.loads(self.state_path.read_text())
        return {bytes.fromhex(k): v for k, v in data.get("book", {}).items()}

    def save_peer(self, peer: Peer, book: Optional[dict[bytes, str]] = None) -> None:
        data = _dump_state(peer)
        data["book"] = {k.hex(): v for k, v in sorted((book if book is not None else self.book()).items())}
        tmp = self.state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
        os.replace(tmp, self.state_path)


def _pair_hashes(pair: BlockPair) -> list[str]:
    return [pair.proposal.hash.hex(), pair.agreement.hash.hex()]


def _dump_claim(claim: Claim, witness: Witness) -> dict:
    return {"metadata": claim.metadata.encode().hex(), "commitment": claim.commitment.hex(),
            "value": witness.value.hex(), "randomness": witness.randomness.hex()}


def _dump_state(peer: Peer) -> dict:
    claims = {}
    for name, owned in peer.claims.items():
        entry = _dump_claim(owned.claim, owned.witness)
        entry["origin"] = _pair_hashes(owned.origin) if owned.origin else None
        entry["attestations"] = [_pair_hashes(p) for p in owned.attestations]
        claims[name] = entry
    return {
        "version": STATE_VERSION,
        "counter": peer._counter,
        "directory": {k.hex(): v for k, v in sorted(peer.directory.items())},
        "claims": claims,
        "pending": {n: _dump_claim(c, w) for n, (c, w) in peer.pending_claims.items()},
        "attested": {k.hex(): b.hash.hex() for k, b in peer.attested.items()},
        "revoked": {k.hex(): b.hash.hex() for k, b in peer.revoked.items()},
        "known_revocations": {k.hex(): [b.hash.hex() for b in v]
                              for k, v in peer.known_revocations.items()},
        "presentations": [p.encode().hex() for p in peer.presentations],
    }


def _load_state(peer: Peer, data: dict) -> None:
    if data.get("version") != STATE_VERSION:
        raise StorageCorruption(f"unsupported state version {data.get('version')!r}")

    def block(h: str) -> HalfBlock:
        b = peer.backend.by_hash(bytes.fromhex(h))
        if b is None:
            raise StorageCorruption(f"state references block {h[:16]} missing from the store")
        return b

    def pair(hs: list[str]) -> BlockPair:
        return BlockPair(block(hs[0]), block(hs[1]))

    def claim(entry: dict) -> tuple[Claim, Witness]:
        md = ClaimMetadata.decode(bytes.fromhex(entry["metadata"]))
        return (Claim(md, peer.pk, bytes.fromhex(entry["commitment"])),
                Witness(bytes.fromhex(entry["value"]), bytes.fromhex(entry["randomness"])))

    peer._counter = data["counter"]
    peer.directory = {bytes.fromhex(k): v for k, v in data["directory"].items()}
    for name, entry in data["claims"].items():
        c, w = claim(entry)
        origin = pair(entry["origin"]) if entry["origin"] else None
        peer.claims[name] = OwnedClaim(c, w, origin, [pair(p) for p in entry["attestations"]])
    peer.pending_claims = {n: claim(e) for n, e in data["pending"].items()}
    peer.attested = {bytes.fromhex(k): block(h) for k, h in data["attested"].items()}
    peer.revoked = {bytes.fromhex(k): block(h) for k, h in data["revoked"].items()}
    peer.known_revocations = {bytes.fromhex(k): [block(h) for h in v]
                              for k, v in data["known_revocations"].items()}
    peer.presentations = []
    for hexed in data["presentations"]:
        raw = bytes.fromhex(hexed)
        peer.presentations.append(Presentation(SnapshotReceipt.decode(raw[:-32]), raw[-32:]))
