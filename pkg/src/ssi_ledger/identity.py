"""Ed25519 identities: key generation, signing, per-attribute key derivation.

Keys and signatures are raw bytes (32-byte seed, 32-byte public key,
64-byte signature); nothing here wraps them in ASN.1 or PEM.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field

import nacl.bindings as sodium
from nacl.exceptions import BadSignatureError, CryptoError

from .errors import InvalidAttributeName, InvalidSeed, MalformedKey, MalformedSignature

SEED_BYTES = 32
PUBLIC_KEY_BYTES = 32
SIGNATURE_BYTES = 64

_ATTRIBUTE_KEY_TAG = b"ssi-ledger/attribute-key.v1"


@dataclass(frozen=True)
class KeyPair:
    secret_key: bytes = field(repr=False)
    public_key: bytes
    # libsodium's 64-byte expanded signing key, cached to avoid re-deriving per signature
    _signing_key: bytes = field(repr=False, compare=False, default=b"")

    @property
    def short(self) -> str:
        return self.public_key.hex()[:8]


def generate_identity(seed: bytes) -> KeyPair:
    """Derive a key pair from a 32-byte seed. The same seed always yields the same key."""
    if not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_BYTES:
        raise InvalidSeed(f"seed must be {SEED_BYTES} bytes")
    pk, sk = sodium.crypto_sign_seed_keypair(bytes(seed))
    return KeyPair(secret_key=bytes(seed), public_key=pk, _signing_key=sk)


def sign(key: KeyPair, message: bytes) -> bytes:
    return sodium.crypto_sign(bytes(message), key._signing_key)[:SIGNATURE_BYTES]


def verify_signature(public_key: bytes, message: bytes, sig: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_BYTES:
        raise MalformedKey(f"public key must be {PUBLIC_KEY_BYTES} bytes, got {len(public_key)}")
    if len(sig) != SIGNATURE_BYTES:
        raise MalformedSignature(f"signature must be {SIGNATURE_BYTES} bytes, got {len(sig)}")
    try:
        sodium.crypto_sign_open(bytes(sig) + bytes(message), bytes(public_key))
    except (BadSignatureError, CryptoError):
        return False
    return True


def derive_attribute_key(identity: KeyPair, attribute_name: str) -> KeyPair:
    """Per-attribute key: HMAC-SHA256 of the root seed over the attribute name.

    The derived seed is a PRF output, so it says nothing about the root seed.
    """
    if not attribute_name:
        raise InvalidAttributeName("attribute name must be nonempty")
    seed = hmac.new(identity.secret_key, _ATTRIBUTE_KEY_TAG + attribute_name.encode("utf-8"),
                    hashlib.sha256).digest()
    return generate_identity(seed)
