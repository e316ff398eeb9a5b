"""Personal double-signed chains: proposals, countersigning, validation, forks.

Every identity owns one chain of half-blocks numbered from 1. A two-party
entry is a proposal half on the proposer's chain plus an agreement half on
the owner's chain that links back to it. The owner signs last, so nothing
lands on an owner's chain without the owner's consent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from ..errors import BadProposalSignature, LinkMismatch, PayloadRejected, StaleTail
from ..identity import KeyPair
from .blocks import ZERO_HASH, ZERO_KEY, BlockPair, BlockPayload, HalfBlock, signed


def _position(tail: Optional[HalfBlock]) -> tuple[int, bytes]:
    if tail is None:
        return 1, ZERO_HASH
    return tail.sequence_number + 1, tail.hash


def _check_tail(store, public_key: bytes, tail: Optional[HalfBlock]) -> None:
    if store is None:
        return
    current = store.tail(public_key)
    if (current.hash if current else None) != (tail.hash if tail else None):
        raise StaleTail(f"chain {public_key.hex()[:8]} moved past the given tail")


def create_proposal(signer: KeyPair, counterparty_public_key: bytes, payload: BlockPayload,
                    signer_chain_tail: Optional[HalfBlock], now: int, store=None) -> HalfBlock:
    """Build and sign the proposer's half. Pass ``store`` to reject a stale tail."""
    _check_tail(store, signer.public_key, signer_chain_tail)
    seq, prev = _position(signer_chain_tail)
    block = HalfBlock(int(payload.block_type), signer.public_key, seq, counterparty_public_key, 0,
                      prev, now, payload)
    return signed(block, signer)


def create_single(signer: KeyPair, payload: BlockPayload, signer_chain_tail: Optional[HalfBlock],
                  now: int, store=None) -> HalfBlock:
    """A half-block with no counterparty (revocations)."""
    return create_proposal(signer, ZERO_KEY, payload, signer_chain_tail, now, store)


def countersign(owner: KeyPair, proposal: HalfBlock, owner_chain_tail: Optional[HalfBlock], now: int,
                accept: Callable[[HalfBlock], bool] | None = None, store=None) -> BlockPair:
    if not proposal.signature_ok():
        raise BadProposalSignature("proposal signature does not verify")
    if proposal.link_public_key != owner.public_key:
        raise LinkMismatch("proposal is addressed to a different key")
    if proposal.link_sequence_number != 0:
        raise LinkMismatch("not a proposal: already links a sequence number")
    if proposal.payload.problems():
        raise PayloadRejected("malformed payload: " + "; ".join(proposal.payload.problems()))
    if accept is not None and not accept(proposal):
        raise PayloadRejected("owner declined to countersign")
    _check_tail(store, owner.public_key, owner_chain_tail)
    seq, prev = _position(owner_chain_tail)
    agreement = HalfBlock(proposal.block_type, owner.public_key, seq, proposal.public_key,
                          proposal.sequence_number, prev, now, proposal.payload)
    return BlockPair(proposal, signed(agreement, owner))


@dataclass(frozen=True)
class Violation:
    sequence_number: int
    message: str

    def __str__(self) -> str:
        return f"seq {self.sequence_number}: {self.message}"


def validate_chain(blocks: Iterable[HalfBlock]) -> list[Violation]:
    """Every problem in one identity's chain, in order. Empty list means the chain is ok."""
    blocks = list(blocks)
    out: list[Violation] = []
    if not blocks:
        return out
    owner = blocks[0].public_key
    expected = 1
    prev: Optional[HalfBlock] = None
    for block in blocks:
        seq = block.sequence_number
        if block.public_key != owner:
            out.append(Violation(seq, "block belongs to a different public key"))
            continue
        for problem in block.problems():
            out.append(Violation(seq, problem))
        if prev is not None and seq == prev.sequence_number:
            out.append(Violation(seq, "fork: two blocks at the same sequence number"))
            continue
        if seq > expected:
            out.extend(Violation(s, f"gap at sequence {s}") for s in range(expected, seq))
        elif seq < expected:
            out.append(Violation(seq, "sequence numbers not increasing"))
        if prev is not None and seq == prev.sequence_number + 1 and block.previous_hash != prev.hash:
            out.append(Violation(seq, "previous hash does not match block %d" % prev.sequence_number))
        expected = max(expected, seq + 1)
        prev = block
    return out


@dataclass(frozen=True)
class ForkProof:
    """Two validly signed, different blocks at the same (public key, sequence number)."""

    block_a: HalfBlock
    block_b: HalfBlock

    def valid(self) -> bool:
        return detect_fork(self.block_a, self.block_b) is not None


def detect_fork(a: HalfBlock, b: HalfBlock) -> Optional[ForkProof]:
    if a.public_key != b.public_key or a.sequence_number != b.sequence_number:
        return None
    if a.hash == b.hash:
        return None
    if not (a.signature_ok() and b.signature_ok()):
        return None
    first, second = sorted((a, b), key=lambda blk: blk.hash)
    return ForkProof(first, second)
