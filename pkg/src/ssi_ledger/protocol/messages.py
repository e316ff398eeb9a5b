"""Wire messages and framing.

Frame::

    body_length (4 BE) | type (1) | body

Every body starts with the 8-byte session id the message belongs to,
followed by the type-specific fields below (lp16/lp32 = 2/4-byte BE
length prefix). Unknown type codes are rejected with DecodeError.

    01 AttestationRequest    metadata | lp32 value | lp32 commitment | lp32 randomness | lp32 origin agreement (empty for a new claim)
    02 AttestationProposal   lp32 half-block
    03 AttestationAgreement  lp32 half-block
    04 VerificationRequest   lp16 name | predicate | nonce (32) | escalation (1) | interactive (1)
    05 ClaimPresentation     origin pair | count (2) | count x pure pair | lp32 commitment
    06 ProofMessage          proof
    07 ProofCommit           lp32 first move
    08 ProofChallenge        challenge (32)
    09 ProofResponse         lp32 response
    0A IntentProposal        lp32 half-block
    0B IntentAgreement       lp32 half-block
    0C SnapshotReceiptMsg    receipt (136)
    0D ActiveCheckRequest    metadata_block_hash (32) | challenge_nonce (32) | intent_timestamp (8) | lp32 intent agreement
    0E ActiveCheckResponse   attestor key (32) | reached (1) | lp32 proposal | lp32 agreement (either may be empty)
    0F RevocationAnnounce    lp32 half-block
    10 KeyOwnershipChallenge timestamp (8) | nonce (32) | second key (32)
    11 KeyOwnershipResponse  signature (64)
    12 Reject                lp16 reason (UTF-8)

Pairs inside a message are encoded as lp32 proposal | lp32 agreement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..audit import SnapshotReceipt
from ..chain.blocks import BlockPair, HalfBlock
from ..claims import ClaimMetadata
from ..encoding import Reader, lp16, lp32, u8, u16, u32, u64
from ..errors import DecodeError
from ..proofs import Predicate, Proof, read_predicate

SESSION_ID_BYTES = 8
MAX_FRAME = 1 << 24


class MsgType(enum.IntEnum):
    ATTESTATION_REQUEST = 0x01
    ATTESTATION_PROPOSAL = 0x02
    ATTESTATION_AGREEMENT = 0x03
    VERIFICATION_REQUEST = 0x04
    CLAIM_PRESENTATION = 0x05
    PROOF = 0x06
    PROOF_COMMIT = 0x07
    PROOF_CHALLENGE = 0x08
    PROOF_RESPONSE = 0x09
    INTENT_PROPOSAL = 0x0A
    INTENT_AGREEMENT = 0x0B
    SNAPSHOT_RECEIPT = 0x0C
    ACTIVE_CHECK_REQUEST = 0x0D
    ACTIVE_CHECK_RESPONSE = 0x0E
    REVOCATION_ANNOUNCE = 0x0F
    KEY_CHALLENGE = 0x10
    KEY_RESPONSE = 0x11
    REJECT = 0x12


class Escalation(enum.IntEnum):
    PASSIVE = 0
    INTENT = 1
    ACTIVE = 2

    @classmethod
    def parse(cls, text: str) -> "Escalation":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown escalation {text!r}") from None


def _opt_block(b: Optional[HalfBlock]) -> bytes:
    return lp32(b.encode() if b is not None else b"")


def _read_opt_block(r: Reader) -> Optional[HalfBlock]:
    raw = r.lp32()
    return HalfBlock.decode(raw) if raw else None


# --- message bodies (after the session id) --------------------------------

@dataclass(frozen=True)
class AttestationRequest:
    metadata: ClaimMetadata
    value: bytes
    commitment: bytes
    randomness: bytes
    origin: Optional[HalfBlock] = None
    type = MsgType.ATTESTATION_REQUEST

    def encode(self) -> bytes:
        return (self.metadata.encode() + lp32(self.value) + lp32(self.commitment)
                + lp32(self.randomness) + _opt_block(self.origin))

    @classmethod
    def read(cls, r: Reader):
        return cls(ClaimMetadata.read(r), r.lp32(), r.lp32(), r.lp32(), _read_opt_block(r))


@dataclass(frozen=True)
class _BlockMessage:
    block: HalfBlock

    def encode(self) -> bytes:
        return lp32(self.block.encode())

    @classmethod
    def read(cls, r: Reader):
        return cls(HalfBlock.decode(r.lp32()))


class AttestationProposal(_BlockMessage):
    type = MsgType.ATTESTATION_PROPOSAL


class AttestationAgreement(_BlockMessage):
    type = MsgType.ATTESTATION_AGREEMENT


class IntentProposal(_BlockMessage):
    type = MsgType.INTENT_PROPOSAL


class IntentAgreement(_BlockMessage):
    type = MsgType.INTENT_AGREEMENT


class RevocationAnnounce(_BlockMessage):
    type = MsgType.REVOCATION_ANNOUNCE


@dataclass(frozen=True)
class VerificationRequest:
    name: str
    predicate: Predicate
    nonce: bytes
    escalation: Escalation
    interactive: bool = False
    type = MsgType.VERIFICATION_REQUEST

    def encode(self) -> bytes:
        return (lp16(self.name.encode("utf-8")) + self.predicate.encode() + self.nonce
                + u8(int(self.escalation)) + u8(int(self.interactive)))

    @classmethod
    def read(cls, r: Reader):
        try:
            name = r.lp16().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None
        pred = read_predicate(r)
        nonce = r.take(32)
        esc, inter = r.u8(), r.u8()
        if esc > 2 or inter > 1:
            raise DecodeError("bad escalation or interactive flag")
        return cls(name, pred, nonce, Escalation(esc), bool(inter))


def _pair_bytes(p: BlockPair) -> bytes:
    return lp32(p.proposal.encode()) + lp32(p.agreement.encode())


@dataclass(frozen=True)
class ClaimPresentation:
    origin: BlockPair
    attestations: tuple[BlockPair, ...]
    commitment: bytes
    type = MsgType.CLAIM_PRESENTATION

    def encode(self) -> bytes:
        return (_pair_bytes(self.origin) + u16(len(self.attestations))
                + b"".join(_pair_bytes(p) for p in self.attestations) + lp32(self.commitment))

    @classmethod
    def read(cls, r: Reader):
        origin = BlockPair.read(r)
        pure = tuple(BlockPair.read(r) for _ in range(r.u16()))
        return cls(origin, pure, r.lp32())


@dataclass(frozen=True)
class ProofMessage:
    proof: Proof
    type = MsgType.PROOF

    def encode(self) -> bytes:
        return self.proof.encode()

    @classmethod
    def read(cls, r: Reader):
        return cls(Proof.read(r))


@dataclass(frozen=True)
class ProofCommit:
    move: bytes
    type = MsgType.PROOF_COMMIT

    def encode(self) -> bytes:
        return lp32(self.move)

    @classmethod
    def read(cls, r: Reader):
        return cls(r.lp32())


@dataclass(frozen=True)
class ProofChallenge:
    challenge: bytes
    type = MsgType.PROOF_CHALLENGE

    def encode(self) -> bytes:
        return self.challenge

    @classmethod
    def read(cls, r: Reader):
        return cls(r.take(32))


@dataclass(frozen=True)
class ProofResponse:
    response: bytes
    type = MsgType.PROOF_RESPONSE

    def encode(self) -> bytes:
        return lp32(self.response)

    @classmethod
    def read(cls, r: Reader):
        return cls(r.lp32())


@dataclass(frozen=True)
class SnapshotReceiptMsg:
    receipt: SnapshotReceipt
    type = MsgType.SNAPSHOT_RECEIPT

    def encode(self) -> bytes:
        return self.receipt.encode()

    @classmethod
    def read(cls, r: Reader):
        return cls(SnapshotReceipt.read(r))


@dataclass(frozen=True)
class ActiveCheckRequest:
    metadata_block_hash: bytes
    challenge_nonce: bytes
    intent_timestamp: int
    intent_block: HalfBlock
    type = MsgType.ACTIVE_CHECK_REQUEST

    def encode(self) -> bytes:
        return (self.metadata_block_hash + self.challenge_nonce + u64(self.intent_timestamp)
                + lp32(self.intent_block.encode()))

    @classmethod
    def read(cls, r: Reader):
        return cls(r.take(32), r.take(32), r.u64(), HalfBlock.decode(r.lp32()))


@dataclass(frozen=True)
class ActiveCheckResponse:
    attestor: bytes
    reached: bool
    proposal: Optional[HalfBlock] = None
    agreement: Optional[HalfBlock] = None
    type = MsgType.ACTIVE_CHECK_RESPONSE

    @property
    def pair(self) -> Optional[BlockPair]:
        if self.proposal is None or self.agreement is None:
            return None
        return BlockPair(self.proposal, self.agreement)

    def encode(self) -> bytes:
        return (self.attestor + u8(int(self.reached)) + _opt_block(self.proposal)
                + _opt_block(self.agreement))

    @classmethod
    def read(cls, r: Reader):
        attestor, reached = r.take(32), r.u8()
        if reached > 1:
            raise DecodeError("bad reached flag")
        return cls(attestor, bool(reached), _read_opt_block(r), _read_opt_block(r))


@dataclass(frozen=True)
class KeyOwnershipChallenge:
    timestamp: int
    nonce: bytes
    second_key: bytes
    type = MsgType.KEY_CHALLENGE

    def encode(self) -> bytes:
        return u64(self.timestamp) + self.nonce + self.second_key

    @classmethod
    def read(cls, r: Reader):
        return cls(r.u64(), r.take(32), r.take(32))


@dataclass(frozen=True)
class KeyOwnershipResponse:
    signature: bytes
    type = MsgType.KEY_RESPONSE

    def encode(self) -> bytes:
        return self.signature

    @classmethod
    def read(cls, r: Reader):
        return cls(r.take(64))


@dataclass(frozen=True)
class Reject:
    reason: str
    type = MsgType.REJECT

    def encode(self) -> bytes:
        return lp16(self.reason.encode("utf-8"))

    @classmethod
    def read(cls, r: Reader):
        try:
            return cls(r.lp16().decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None


Message = (AttestationRequest | AttestationProposal | AttestationAgreement | VerificationRequest
           | ClaimPresentation | ProofMessage | ProofCommit | ProofChallenge | ProofResponse
           | IntentProposal | IntentAgreement | SnapshotReceiptMsg | ActiveCheckRequest
           | ActiveCheckResponse | RevocationAnnounce | KeyOwnershipChallenge
           | KeyOwnershipResponse | Reject)

_BY_TYPE = {cls.type: cls for cls in (
    AttestationRequest, AttestationProposal, AttestationAgreement, VerificationRequest,
    ClaimPresentation, ProofMessage, ProofCommit, ProofChallenge, ProofResponse, IntentProposal,
    IntentAgreement, SnapshotReceiptMsg, ActiveCheckRequest, ActiveCheckResponse,
    RevocationAnnounce, KeyOwnershipChallenge, KeyOwnershipResponse, Reject)}


@dataclass(frozen=True)
class Envelope:
    session_id: bytes
    message: Message

    @property
    def type(self) -> MsgType:
        return self.message.type


def encode_frame(session_id: bytes, message: Message) -> bytes:
    if len(session_id) != SESSION_ID_BYTES:
        raise ValueError("session id must be 8 bytes")
    body = session_id + message.encode()
    return u32(len(body)) + u8(int(message.type)) + body


def decode_frame(frame: bytes) -> Envelope:
    """Decode one complete frame; trailing or missing bytes are errors."""
    r = Reader(frame)
    length = r.u32()
    code = r.u8()
    if r.remaining() != length:
        raise DecodeError(f"frame length {length} does not match {r.remaining()} body bytes")
    cls = _BY_TYPE.get(code)
    if cls is None:
        raise DecodeError(f"unknown message type 0x{code:02x}")
    sid = r.take(SESSION_ID_BYTES)
    msg = cls.read(r)
    r.done()
    return Envelope(sid, msg)


def frame_type(frame: bytes) -> Optional[MsgType]:
    if len(frame) < 5 or frame[4] not in _BY_TYPE:
        return None
    return MsgType(frame[4])


def frame_session(frame: bytes) -> bytes:
    return frame[5:5 + SESSION_ID_BYTES]


def read_frame(stream) -> Optional[bytes]:
    """Read one frame from a binary file-like stream; None at clean end of stream."""
    head = stream.read(5)
    if not head:
        return None
    if len(head) < 5:
        raise DecodeError("truncated frame header")
    n = int.from_bytes(head[:4], "big")
    if n > MAX_FRAME:
        raise DecodeError("frame too large")
    body = stream.read(n)
    if len(body) < n:
        raise DecodeError("truncated frame body")
    return head + body
