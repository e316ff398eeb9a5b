import random

import pytest
from hypothesis import given, strategies as st

import ed25519_oracle as oracle
from ssi_ledger.errors import InvalidAttributeName, InvalidSeed, MalformedKey, MalformedSignature
from ssi_ledger.identity import derive_attribute_key, generate_identity, sign, verify_signature

# RFC 8032 section 7.1, test 1
RFC_SEED = bytes.fromhex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60")
RFC_PK = bytes.fromhex("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a")
RFC_SIG = bytes.fromhex(
    "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b")


def test_published_vector():
    key = generate_identity(RFC_SEED)
    assert key.public_key == RFC_PK
    assert sign(key, b"") == RFC_SIG
    assert verify_signature(RFC_PK, b"", RFC_SIG)


def test_zero_seed_is_deterministic():
    a = generate_identity(bytes(32))
    b = generate_identity(bytes(32))
    assert a.public_key == b.public_key == oracle.public_key(bytes(32))


def test_distinct_seeds_distinct_keys():
    rng = random.Random(1)
    keys = {generate_identity(rng.randbytes(32)).public_key for _ in range(1000)}
    assert len(keys) == 1000


@pytest.mark.parametrize("n", [0, 16, 31, 33])
def test_seed_length(n):
    with pytest.raises(InvalidSeed):
        generate_identity(bytes(n))


def test_sign_verify_round_trip():
    key = generate_identity(bytes(range(32)))
    assert verify_signature(key.public_key, b"abc", sign(key, b"abc"))
    assert verify_signature(key.public_key, b"", sign(key, b""))


def test_every_single_bit_flip_rejects():
    key = generate_identity(bytes(range(32)))
    sig = sign(key, b"abc")
    for bit in range(len(sig) * 8):
        bad = bytearray(sig)
        bad[bit // 8] ^= 1 << (bit % 8)
        assert not verify_signature(key.public_key, b"abc", bytes(bad)), bit


def test_wrong_public_key_rejects():
    a, b = generate_identity(bytes(32)), generate_identity(bytes([1]) * 32)
    assert not verify_signature(b.public_key, b"abc", sign(a, b"abc"))


def test_malformed_inputs():
    key = generate_identity(bytes(32))
    with pytest.raises(MalformedSignature):
        verify_signature(key.public_key, b"abc", sign(key, b"abc")[:63])
    with pytest.raises(MalformedKey):
        verify_signature(key.public_key[:31], b"abc", sign(key, b"abc"))


def test_cross_key_rejection_sampled():
    rng = random.Random(2)
    for _ in range(1000):
        k1 = generate_identity(rng.randbytes(32))
        k2 = generate_identity(rng.randbytes(32))
        msg = rng.randbytes(rng.randrange(64))
        assert not verify_signature(k2.public_key, msg, sign(k1, msg))


@given(st.binary(min_size=32, max_size=32), st.binary(max_size=200))
def test_signatures_agree_with_oracle(seed, msg):
    key = generate_identity(seed)
    sig = sign(key, msg)
    assert key.public_key == oracle.public_key(seed)
    assert oracle.verify(key.public_key, msg, sig)
    assert verify_signature(key.public_key, msg, sig)


def test_attribute_keys():
    root = generate_identity(bytes(32))
    age1, age2 = derive_attribute_key(root, "age"), derive_attribute_key(root, "age")
    assert age1 == age2
    assert age1.public_key != derive_attribute_key(root, "name").public_key
    assert age1.public_key != root.public_key
    assert verify_signature(age1.public_key, b"m", sign(age1, b"m"))
    with pytest.raises(InvalidAttributeName):
        derive_attribute_key(root, "")


@given(st.binary(min_size=32, max_size=32), st.text(min_size=1, max_size=40))
def test_attribute_derivation_is_pure(seed, name):
    a = derive_attribute_key(generate_identity(seed), name)
    b = derive_attribute_key(generate_identity(seed), name)
    assert a.public_key == b.public_key
