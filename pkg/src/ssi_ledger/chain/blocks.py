"""Half-blocks, block payloads and their bit-exact encodings.

Pre-signature encoding of a half-block::

    block_type (1) | public_key (32) | sequence_number (8 BE)
    | link_public_key (32) | link_sequence_number (8 BE) | previous_hash (32)
    | timestamp (8 BE) | payload_len (4 BE) | payload

The full encoding appends the 64-byte signature; the block hash is SHA-256
of the full encoding.

Payload layouts (block_type in parentheses)::

    ClaimOrigin (1)     canonical ClaimMetadata
    PureAttestation (2) metadata_block_hash (32)
    Intent (3)          metadata_block_hash (32) | challenge_nonce (32) | intent_timestamp (8)
    IntentResponse (4)  intent_block_hash (32) | status (1: 0 current, 1 revoked) | response_timestamp (8)
    Revocation (5)      metadata_block_hash (32) | revocation_timestamp (8)
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, replace
from functools import cached_property

from ..claims import ClaimMetadata
from ..encoding import Reader, U64_MAX, u8, u32, u64
from ..errors import DecodeError, InvalidClaim
from ..identity import KeyPair, sign, verify_signature

HASH_BYTES = 32
KEY_BYTES = 32
SIG_BYTES = 64
ZERO_HASH = bytes(HASH_BYTES)
ZERO_KEY = bytes(KEY_BYTES)
HEADER_BYTES = 1 + 32 + 8 + 32 + 8 + 32 + 8 + 4


class BlockType(enum.IntEnum):
    CLAIM_ORIGIN = 1
    PURE_ATTESTATION = 2
    INTENT = 3
    INTENT_RESPONSE = 4
    REVOCATION = 5


class Status(enum.IntEnum):
    CURRENT = 0
    REVOKED = 1


@dataclass(frozen=True)
class ClaimOrigin:
    metadata: ClaimMetadata
    block_type = BlockType.CLAIM_ORIGIN

    def encode(self) -> bytes:
        return self.metadata.encode()

    def problems(self) -> list[str]:
        return self.metadata.problems()


@dataclass(frozen=True)
class PureAttestation:
    metadata_block_hash: bytes
    block_type = BlockType.PURE_ATTESTATION

    def encode(self) -> bytes:
        return self.metadata_block_hash

    def problems(self) -> list[str]:
        return _hash_problems(self.metadata_block_hash)


@dataclass(frozen=True)
class Intent:
    metadata_block_hash: bytes
    challenge_nonce: bytes
    intent_timestamp: int
    block_type = BlockType.INTENT

    def encode(self) -> bytes:
        return self.metadata_block_hash + self.challenge_nonce + u64(self.intent_timestamp)

    def problems(self) -> list[str]:
        out = _hash_problems(self.metadata_block_hash)
        if len(self.challenge_nonce) != 32:
            out.append("challenge nonce must be 32 bytes")
        return out + _ts_problems(self.intent_timestamp)


@dataclass(frozen=True)
class IntentResponse:
    intent_block_hash: bytes
    status: Status
    response_timestamp: int
    block_type = BlockType.INTENT_RESPONSE

    def encode(self) -> bytes:
        return self.intent_block_hash + u8(int(self.status)) + u64(self.response_timestamp)

    def problems(self) -> list[str]:
        return _hash_problems(self.intent_block_hash) + _ts_problems(self.response_timestamp)


@dataclass(frozen=True)
class Revocation:
    metadata_block_hash: bytes
    revocation_timestamp: int
    block_type = BlockType.REVOCATION

    def encode(self) -> bytes:
        return self.metadata_block_hash + u64(self.revocation_timestamp)

    def problems(self) -> list[str]:
        return _hash_problems(self.metadata_block_hash) + _ts_problems(self.revocation_timestamp)


BlockPayload = ClaimOrigin | PureAttestation | Intent | IntentResponse | Revocation


def _hash_problems(h: bytes) -> list[str]:
    if len(h) != HASH_BYTES:
        return ["referenced hash must be 32 bytes"]
    if h == ZERO_HASH:
        return ["referenced hash is all zeros"]
    return []


def _ts_problems(ts: int) -> list[str]:
    return [] if 0 < ts <= U64_MAX else ["timestamp must be positive"]


def decode_payload(block_type: int, data: bytes) -> BlockPayload:
    r = Reader(data)
    if block_type == BlockType.CLAIM_ORIGIN:
        p = ClaimOrigin(ClaimMetadata.read(r))
    elif block_type == BlockType.PURE_ATTESTATION:
        p = PureAttestation(r.take(32))
    elif block_type == BlockType.INTENT:
        p = Intent(r.take(32), r.take(32), r.u64())
    elif block_type == BlockType.INTENT_RESPONSE:
        h = r.take(32)
        status = r.u8()
        if status not in (0, 1):
            raise DecodeError(f"bad intent response status {status}")
        p = IntentResponse(h, Status(status), r.u64())
    elif block_type == BlockType.REVOCATION:
        p = Revocation(r.take(32), r.u64())
    else:
        raise DecodeError(f"unknown block type {block_type}")
    r.done()
    return p


@dataclass(frozen=True)
class HalfBlock:
    block_type: int
    public_key: bytes
    sequence_number: int
    link_public_key: bytes
    link_sequence_number: int
    previous_hash: bytes
    timestamp: int
    payload: BlockPayload
    signature: bytes = b""

    def pre_signature(self) -> bytes:
        body = self.payload.encode()
        return (u8(self.block_type) + self.public_key + u64(self.sequence_number)
                + self.link_public_key + u64(self.link_sequence_number) + self.previous_hash
                + u64(self.timestamp) + u32(len(body)) + body)

    def encode(self) -> bytes:
        return self.pre_signature() + self.signature

    @cached_property
    def hash(self) -> bytes:
        return hashlib.sha256(self.encode()).digest()

    @property
    def is_proposal(self) -> bool:
        return self.link_public_key != ZERO_KEY and self.link_sequence_number == 0

    @property
    def is_agreement(self) -> bool:
        return self.link_sequence_number != 0

    @cached_property
    def _signature_ok(self) -> bool:
        try:
            return verify_signature(self.public_key, self.pre_signature(), self.signature)
        except Exception:
            return False

    def signature_ok(self) -> bool:
        return self._signature_ok

    def problems(self) -> list[str]:
        """Structural and signature problems of this block on its own (no chain context)."""
        out = []
        try:
            payload_problems = self.payload.problems()
        except (AttributeError, InvalidClaim):
            payload_problems = ["undecodable payload"]
        if payload_problems or self.payload.block_type != self.block_type:
            out.append("malformed payload: " + "; ".join(payload_problems or ["type mismatch"]))
        if self.sequence_number < 1:
            out.append("sequence number must start at 1")
        if (self.previous_hash == ZERO_HASH) != (self.sequence_number == 1):
            out.append("previous hash must be zeros exactly for sequence 1")
        if not self.signature_ok():
            out.append("bad signature")
        return out

    @classmethod
    def read(cls, r: Reader) -> "HalfBlock":
        block_type = r.u8()
        public_key = r.take(32)
        seq = r.u64()
        link_pk = r.take(32)
        link_seq = r.u64()
        prev = r.take(32)
        ts = r.u64()
        payload = decode_payload(block_type, r.lp32())
        sig = r.take(SIG_BYTES)
        return cls(block_type, public_key, seq, link_pk, link_seq, prev, ts, payload, sig)

    @classmethod
    def decode(cls, data: bytes) -> "HalfBlock":
        r = Reader(data)
        b = cls.read(r)
        r.done()
        return b


def block_hash(block: HalfBlock) -> bytes:
    return block.hash


def signed(block: HalfBlock, key: KeyPair) -> HalfBlock:
    unsigned = replace(block, signature=b"")
    return replace(unsigned, signature=sign(key, unsigned.pre_signature()))


@dataclass(frozen=True)
class BlockPair:
    proposal: HalfBlock
    agreement: HalfBlock

    def problems(self) -> list[str]:
        out = []
        p, a = self.proposal, self.agreement
        if a.link_public_key != p.public_key or p.link_public_key != a.public_key:
            out.append("link public keys do not cross-reference")
        if a.link_sequence_number != p.sequence_number:
            out.append("agreement does not link the proposal's sequence number")
        if p.payload.encode() != a.payload.encode() or p.block_type != a.block_type:
            out.append("payloads differ")
        if not p.signature_ok():
            out.append("bad proposal signature")
        if not a.signature_ok():
            out.append("bad agreement signature")
        return out

    def valid(self) -> bool:
        return not self.problems()

    def encode(self) -> bytes:
        p, a = self.proposal.encode(), self.agreement.encode()
        return u32(len(p)) + p + u32(len(a)) + a

    @classmethod
    def read(cls, r: Reader) -> "BlockPair":
        return cls(HalfBlock.decode(r.lp32()), HalfBlock.decode(r.lp32()))

    @classmethod
    def decode(cls, data: bytes) -> "BlockPair":
        r = Reader(data)
        p = cls.read(r)
        r.done()
        return p
