"""Hand-built evidence for fraud-proof tests: forks and withheld revocations."""

import hashlib

from ssi_ledger.audit import make_snapshot_receipt
from ssi_ledger.chain import (
    ClaimOrigin, MemoryStore, PureAttestation, Revocation, countersign, create_proposal,
    create_single,
)
from ssi_ledger.claims import ClaimMetadata

from conftest import make_key


def metadata(label: str, ts: int) -> ClaimMetadata:
    return ClaimMetadata(label, ts, 0, "disclose.v1", hashlib.sha256(label.encode()).digest())


class WithheldCase:
    """Owner holds a claim attested by ``attestor``; the attestor revokes at t0,
    the owner signs a receipt at t1."""

    def __init__(self, label: str, t0: int, t1: int):
        self.owner = make_key(label + "/owner")
        self.attestor = make_key(label + "/attestor")
        self.store = MemoryStore()
        proposal = create_proposal(self.attestor, self.owner.public_key,
                                   ClaimOrigin(metadata(label, 500)), None, 500)
        pair = countersign(self.owner, proposal, None, 500)
        self.store.append(pair.proposal)
        self.store.append(pair.agreement)
        self.claim_block = pair.agreement
        self.claim_ref = pair.agreement.hash
        self.revocation = create_single(self.attestor, Revocation(self.claim_ref, t0), proposal, t0)
        self.store.append(self.revocation)
        self.receipt = make_snapshot_receipt(self.owner, self.store, t1)

    def second_attestation(self, label: str):
        """A pure attestation by a second attestor, and that attestor's revocation at the same t0."""
        other = make_key(label)
        proposal = create_proposal(other, self.owner.public_key, PureAttestation(self.claim_ref),
                                   None, 600)
        pair = countersign(self.owner, proposal, self.claim_block, 600)
        revocation = create_single(other, Revocation(self.claim_ref,
                                                     self.revocation.payload.revocation_timestamp),
                                   proposal, self.revocation.payload.revocation_timestamp)
        return pair, revocation

    @property
    def blocks(self):
        return self.store.blocks()


def fork_blocks(label: str):
    key = make_key(label + "/forker")
    other = make_key(label + "/peer").public_key
    a = create_proposal(key, other, PureAttestation(hashlib.sha256(b"a" + label.encode()).digest()),
                        None, 100)
    b = create_proposal(key, other, PureAttestation(hashlib.sha256(b"b" + label.encode()).digest()),
                        None, 100)
    return a, b
