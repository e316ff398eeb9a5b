import random

import pytest
from hypothesis import given, strategies as st

from ssi_ledger import proofs
from ssi_ledger.claims import (
    ClaimMetadata, Validity, claim_validity, create_claim, digest, metadata_hash,
)
from ssi_ledger.errors import DecodeError, InvalidClaim, InvalidValidityTerm
from ssi_ledger.identity import generate_identity

from conftest import NOW

FIXED = ClaimMetadata("a", 1000, 0, "disclose.v1", bytes([0x11]) * 32)
# canonical bytes of FIXED, assembled by hand from the documented layout
FIXED_BYTES = bytes.fromhex("000161" "00000000000003e8" "0000000000000000" "0b"
                            "646973636c6f73652e7631" + "11" * 32)
# sha256sum over FIXED_BYTES, computed outside Python
FIXED_DIGEST = "666d3e9086efc9738ac4f2ce02ee1865d97ce4c1281464d7ec0215ee842800c4"

OWNER = generate_identity(bytes(32))


def test_canonical_encoding_golden():
    assert FIXED.encode() == FIXED_BYTES
    assert metadata_hash(FIXED).hex() == FIXED_DIGEST
    assert metadata_hash(FIXED) == metadata_hash(FIXED)


def test_timestamp_changes_digest():
    other = ClaimMetadata("a", 1001, 0, "disclose.v1", bytes([0x11]) * 32)
    assert metadata_hash(other) != metadata_hash(FIXED)


def test_invalid_metadata_rejected():
    with pytest.raises(InvalidClaim):
        metadata_hash(ClaimMetadata("", 1000, 0, "disclose.v1", bytes(32)))
    with pytest.raises(InvalidClaim):
        metadata_hash(ClaimMetadata("a", 1000, 0, "disclose.v1", bytes(31)))
    with pytest.raises(InvalidClaim):
        metadata_hash(ClaimMetadata("a", 1000, 999, "disclose.v1", bytes(32)))


def test_trailing_bytes_rejected():
    with pytest.raises(DecodeError):
        ClaimMetadata.decode(FIXED_BYTES + b"\x00")


metadata_st = st.builds(
    ClaimMetadata,
    name=st.text(min_size=1, max_size=30),
    timestamp=st.integers(0, 2**63),
    validity_term=st.just(0),
    proof_format=st.sampled_from(["disclose.v1", "exact-sigma.v1", "range-bits.v1", "x"]),
    proof_link=st.binary(min_size=32, max_size=32),
)


@given(metadata_st)
def test_encoding_round_trip(md):
    assert ClaimMetadata.decode(md.encode()) == md


@given(metadata_st, metadata_st)
def test_encoding_injective(a, b):
    assert (a.encode() == b.encode()) == (a == b)


def test_encoding_round_trip_bulk():
    rng = random.Random(3)
    seen = {}
    for _ in range(10_000):
        name = "".join(rng.choice("abcé中 ") for _ in range(rng.randrange(1, 12)))
        ts = rng.randrange(2**64)
        term = 0 if rng.random() < 0.5 or ts == 2**64 - 1 else rng.randrange(ts + 1, 2**64)
        md = ClaimMetadata(name, ts, term, rng.choice(proofs.formats()), rng.randbytes(32))
        raw = md.encode()
        assert ClaimMetadata.decode(raw) == md
        assert seen.setdefault(raw, md) == md


def test_validity_boundaries():
    md = lambda term: ClaimMetadata("a", 1, term, "disclose.v1", bytes(32))
    assert claim_validity(md(0), 2**63) is Validity.VALID
    assert claim_validity(md(5000), 5000) is Validity.VALID
    assert claim_validity(md(5000), 5001) is Validity.EXPIRED
    assert claim_validity(md(5000), 1000) is Validity.VALID


@given(st.integers(2, 10**6), st.integers(0, 2 * 10**6), st.integers(0, 10**6))
def test_validity_monotone(term, t, dt):
    md = ClaimMetadata("a", 1, term, "disclose.v1", bytes(32))
    if claim_validity(md, t) is Validity.EXPIRED:
        assert claim_validity(md, t + dt) is Validity.EXPIRED


def test_create_range_claim_proves_membership():
    claim, witness = create_claim(OWNER, "age", proofs.encode_range_value(42), 0,
                                  proofs.RANGE_BITS, NOW, random.Random(1))
    assert claim.link_ok()
    assert claim.metadata.proof_link == digest(claim.commitment)
    nonce = bytes(32)
    proof = proofs.prove(proofs.RANGE_BITS, witness, claim.commitment, proofs.InRange(40, 50), nonce)
    assert proofs.verify_proof(proofs.RANGE_BITS, claim.commitment, proofs.InRange(40, 50), proof, nonce)


def test_create_disclosure_claim_reveals_value():
    value = random.Random(2).randbytes(20)
    claim, witness = create_claim(OWNER, "name", value, 0, proofs.DISCLOSE, NOW)
    proof = proofs.prove(proofs.DISCLOSE, witness, claim.commitment, proofs.Equals(value), bytes(32))
    assert proof.transcript[32 + 4:] == value
    assert proofs.verify_proof(proofs.DISCLOSE, claim.commitment, proofs.Equals(value), proof, bytes(32))


def test_past_validity_term_rejected():
    with pytest.raises(InvalidValidityTerm):
        create_claim(OWNER, "a", b"x", NOW - 1, proofs.DISCLOSE, NOW)
