"""Snapshot receipts and self-contained fraud proofs.

Receipt encoding (72 bytes, the exact bytes the owner signs)::

    owner_public_key (32) | receipt_timestamp (8 BE) | tail_hash (32)

followed on the wire by the 64-byte signature.

Fraud proof encoding, a type byte then the embedded evidence::

    1 Fork                block_a (4 BE len | half-block) | block_b (same)
    2 WithheldRevocation  receipt (136) | claim_ref (32) | revocation | claim_block | attestation
                          (each block as 4 BE len | half-block)

A withheld-revocation proof carries, beside the receipt and the revocation,
the owner-signed block the claim reference names (binding the receipt's
signer to the claim) and the owner-signed attestation that names the
revoker as attestor (binding the revoker to the claim). It can then be
checked with nothing but the bytes it contains.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .chain.blocks import BlockType, HalfBlock
from .chain.personal import ForkProof, detect_fork
from .encoding import Reader, lp32, u8, u64
from .errors import DecodeError, EmptyChain, InvalidEvidence
from .identity import KeyPair, sign, verify_signature

RECEIPT_BODY_BYTES = 72
RECEIPT_BYTES = RECEIPT_BODY_BYTES + 64


@dataclass(frozen=True)
class SnapshotReceipt:
    owner_public_key: bytes
    receipt_timestamp: int
    tail_hash: bytes
    owner_signature: bytes = b""

    def body(self) -> bytes:
        return self.owner_public_key + u64(self.receipt_timestamp) + self.tail_hash

    def encode(self) -> bytes:
        return self.body() + self.owner_signature

    def signature_ok(self) -> bool:
        try:
            return verify_signature(self.owner_public_key, self.body(), self.owner_signature)
        except Exception:
            return False

    def covers(self, tail_hash: bytes) -> bool:
        """True iff the receipt is validly signed over exactly this tail."""
        return self.tail_hash == tail_hash and self.signature_ok()

    @classmethod
    def read(cls, r: Reader) -> "SnapshotReceipt":
        return cls(r.take(32), r.u64(), r.take(32), r.take(64))

    @classmethod
    def decode(cls, data: bytes) -> "SnapshotReceipt":
        r = Reader(data)
        out = cls.read(r)
        r.done()
        return out


def make_snapshot_receipt(owner: KeyPair, store, now: int) -> SnapshotReceipt:
    tail = store.tail(owner.public_key)
    if tail is None:
        raise EmptyChain("owner has no blocks to snapshot")
    unsigned = SnapshotReceipt(owner.public_key, now, tail.hash)
    return SnapshotReceipt(owner.public_key, now, tail.hash, sign(owner, unsigned.body()))


@dataclass(frozen=True)
class WithheldRevocation:
    receipt: SnapshotReceipt
    revocation: HalfBlock
    claim_ref: bytes
    claim_block: HalfBlock
    attestation: HalfBlock

    @property
    def revoked_at(self) -> int:
        return self.revocation.payload.revocation_timestamp

    @property
    def presented_at(self) -> int:
        return self.receipt.receipt_timestamp


FraudProof = ForkProof | WithheldRevocation


def _binding_problems(receipt: SnapshotReceipt, revocation: HalfBlock, claim_ref: bytes,
                      claim_block: HalfBlock, attestation: HalfBlock) -> list[str]:
    out = []
    if not receipt.signature_ok():
        out.append("receipt signature")
    for label, block in (("revocation", revocation), ("claim block", claim_block),
                         ("attestation", attestation)):
        if not block.signature_ok():
            out.append(f"{label} signature")
    if revocation.block_type != BlockType.REVOCATION:
        out.append("revocation is not a revocation block")
    if claim_block.hash != claim_ref or claim_block.block_type != BlockType.CLAIM_ORIGIN:
        out.append("claim block does not match the claim reference")
    if claim_block.public_key != receipt.owner_public_key:
        out.append("claim block not on the receipt signer's chain")
    if attestation.public_key != receipt.owner_public_key or not attestation.is_agreement:
        out.append("attestation is not an owner-signed agreement")
    elif attestation.link_public_key != revocation.public_key:
        out.append("revoker is not the attestor of the given attestation")
    elif attestation.hash != claim_ref and not (
            attestation.block_type == BlockType.PURE_ATTESTATION
            and attestation.payload.metadata_block_hash == claim_ref):
        out.append("attestation does not concern the claim")
    return out


def detect_withheld_revocation(receipt: SnapshotReceipt, revocation: HalfBlock, claim_ref: bytes,
                               claim_block: HalfBlock, attestation: HalfBlock | None = None
                               ) -> Optional[WithheldRevocation]:
    """A proof iff the revocation names ``claim_ref`` and predates the receipt strictly.

    ``attestation`` defaults to ``claim_block`` (the revoker attested the origin).
    Raises InvalidEvidence when signatures fail or the pieces do not belong together.
    """
    attestation = claim_block if attestation is None else attestation
    problems = _binding_problems(receipt, revocation, claim_ref, claim_block, attestation)
    if problems:
        raise InvalidEvidence("; ".join(problems))
    if revocation.payload.metadata_block_hash != claim_ref:
        return None
    if not revocation.payload.revocation_timestamp < receipt.receipt_timestamp:
        return None
    return WithheldRevocation(receipt, revocation, claim_ref, claim_block, attestation)


def verify_fraud_proof(proof: FraudProof) -> bool:
    try:
        if isinstance(proof, ForkProof):
            return detect_fork(proof.block_a, proof.block_b) is not None
        if isinstance(proof, WithheldRevocation):
            return detect_withheld_revocation(proof.receipt, proof.revocation, proof.claim_ref,
                                              proof.claim_block, proof.attestation) is not None
    except (InvalidEvidence, AttributeError):
        return False
    return False


def encode_fraud_proof(proof: FraudProof) -> bytes:
    if isinstance(proof, ForkProof):
        return u8(1) + lp32(proof.block_a.encode()) + lp32(proof.block_b.encode())
    return (u8(2) + proof.receipt.encode() + proof.claim_ref + lp32(proof.revocation.encode())
            + lp32(proof.claim_block.encode()) + lp32(proof.attestation.encode()))


def decode_fraud_proof(data: bytes) -> FraudProof:
    r = Reader(data)
    kind = r.u8()
    if kind == 1:
        out = ForkProof(HalfBlock.decode(r.lp32()), HalfBlock.decode(r.lp32()))
    elif kind == 2:
        receipt = SnapshotReceipt.read(r)
        claim_ref = r.take(32)
        out = WithheldRevocation(receipt, HalfBlock.decode(r.lp32()), claim_ref,
                                 HalfBlock.decode(r.lp32()), HalfBlock.decode(r.lp32()))
    else:
        raise DecodeError(f"unknown fraud proof type {kind}")
    r.done()
    return out


def describe(proof: FraudProof) -> str:
    if isinstance(proof, ForkProof):
        a = proof.block_a
        return f"Fork key={a.public_key.hex()[:16]} seq={a.sequence_number}"
    return (f"WithheldRevocation owner={proof.receipt.owner_public_key.hex()[:16]} "
            f"claim={proof.claim_ref.hex()[:16]} T0={proof.revoked_at} T1={proof.presented_at}")


@dataclass(frozen=True)
class Presentation:
    """A receipt a verifier holds, with the claim (metadata block hash) it was shown."""

    receipt: SnapshotReceipt
    claim_ref: bytes

    def encode(self) -> bytes:
        return self.receipt.encode() + self.claim_ref


@dataclass
class Snapshot:
    blocks: list[HalfBlock]
    presentations: list[Presentation]

    BLOCKS_FILE = "blocks.bin"
    RECEIPTS_FILE = "receipts.bin"

    def save(self, directory: str | Path) -> None:
        """Write ``blocks.bin`` (length-prefixed half-blocks) and ``receipts.bin``
        (fixed 168-byte records: receipt then claim reference)."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / self.BLOCKS_FILE).write_bytes(b"".join(lp32(b.encode()) for b in self.blocks))
        (d / self.RECEIPTS_FILE).write_bytes(b"".join(p.encode() for p in self.presentations))

    @classmethod
    def load(cls, directory: str | Path) -> "Snapshot":
        d = Path(directory)
        r = Reader((d / cls.BLOCKS_FILE).read_bytes())
        blocks = []
        while r.remaining():
            blocks.append(HalfBlock.decode(r.lp32()))
        r = Reader((d / cls.RECEIPTS_FILE).read_bytes())
        presentations = []
        while r.remaining():
            presentations.append(Presentation(SnapshotReceipt.read(r), r.take(32)))
        return cls(blocks, presentations)


def _dedupe(blocks: Iterable[HalfBlock]) -> list[HalfBlock]:
    seen: dict[bytes, HalfBlock] = {}
    for b in blocks:
        seen.setdefault(b.hash, b)
    return list(seen.values())


def audit_global(snapshot: Snapshot) -> list[FraudProof]:
    """Every fork and withheld-revocation proof derivable from the snapshot, each once."""
    blocks = [b for b in _dedupe(snapshot.blocks) if b.signature_ok()]
    proofs: list[FraudProof] = []

    slots: dict[tuple[bytes, int], list[HalfBlock]] = {}
    for b in blocks:
        slots.setdefault((b.public_key, b.sequence_number), []).append(b)
    for key in sorted(slots):
        group = sorted(slots[key], key=lambda blk: blk.hash)
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                proofs.append(ForkProof(a, b))

    by_hash = {b.hash: b for b in blocks}
    revocations = [b for b in blocks if b.block_type == BlockType.REVOCATION]
    pure = [b for b in blocks if b.block_type == BlockType.PURE_ATTESTATION and b.is_agreement]
    seen_presentations = set()
    for pres in snapshot.presentations:
        if pres.encode() in seen_presentations:
            continue
        seen_presentations.add(pres.encode())
        claim_block = by_hash.get(pres.claim_ref)
        if claim_block is None:
            continue
        for rev in revocations:
            if rev.payload.metadata_block_hash != pres.claim_ref:
                continue
            attestation = claim_block if claim_block.link_public_key == rev.public_key else next(
                (p for p in pure if p.payload.metadata_block_hash == pres.claim_ref
                 and p.link_public_key == rev.public_key
                 and p.public_key == pres.receipt.owner_public_key), None)
            if attestation is None:
                continue
            try:
                proof = detect_withheld_revocation(pres.receipt, rev, pres.claim_ref, claim_block,
                                                   attestation)
            except InvalidEvidence:
                continue
            if proof is not None:
                proofs.append(proof)
    return proofs
