"""Prime-order group used by the Pedersen-based proof backends.

The group is the order-``ORDER`` subgroup of edwards25519. Elements are the
standard 32-byte compressed Edwards encoding; membership is checked on
decode (canonical, on-curve, in the prime-order subgroup). Scalars travel as
32-byte big-endian integers reduced below ``ORDER``.

``G`` is the standard base point. ``H`` is hashed to the curve from a fixed
domain tag, so nobody knows log_G(H).
"""

from __future__ import annotations

import hashlib

import nacl.bindings as sodium

from .errors import MalformedTranscript

ORDER = 2**252 + 27742317777372353535851937790883648493
ELEMENT_BYTES = 32
SCALAR_BYTES = 32

IDENTITY = b"\x01" + bytes(31)
G = sodium.crypto_scalarmult_ed25519_base_noclamp((1).to_bytes(32, "little"))

H_DOMAIN_TAG = b"ssi-ledger/h.v1"


def hash_to_element(tag: bytes) -> bytes:
    return sodium.crypto_core_ed25519_from_uniform(hashlib.sha256(tag).digest())


H = hash_to_element(H_DOMAIN_TAG)


def _le(k: int) -> bytes:
    return (k % ORDER).to_bytes(32, "little")


def base_mul(k: int) -> bytes:
    """k*G"""
    k %= ORDER
    if k == 0:
        return IDENTITY
    return sodium.crypto_scalarmult_ed25519_base_noclamp(_le(k))


def mul(k: int, point: bytes) -> bytes:
    k %= ORDER
    if k == 0 or point == IDENTITY:
        return IDENTITY
    return sodium.crypto_scalarmult_ed25519_noclamp(_le(k), point)


def add(p: bytes, q: bytes) -> bytes:
    return sodium.crypto_core_ed25519_add(p, q)


def sub(p: bytes, q: bytes) -> bytes:
    return sodium.crypto_core_ed25519_sub(p, q)


def neg(p: bytes) -> bytes:
    return sub(IDENTITY, p)


def commit(m: int, r: int) -> bytes:
    """Pedersen commitment m*G + r*H."""
    return add(base_mul(m), mul(r, H))


def is_element(p: bytes) -> bool:
    if len(p) != ELEMENT_BYTES:
        return False
    return p == IDENTITY or bool(sodium.crypto_core_ed25519_is_valid_point(p))


def decode_element(p: bytes) -> bytes:
    if not is_element(p):
        raise MalformedTranscript("not a prime-order group element")
    return p


def scalar_bytes(k: int) -> bytes:
    return (k % ORDER).to_bytes(SCALAR_BYTES, "big")


def decode_scalar(b: bytes) -> int:
    if len(b) != SCALAR_BYTES:
        raise MalformedTranscript("scalar must be 32 bytes")
    k = int.from_bytes(b, "big")
    if k >= ORDER:
        raise MalformedTranscript("non-canonical scalar")
    return k


def random_scalar(rng) -> int:
    # 512 bits reduced mod ORDER: bias below 2**-250
    return int.from_bytes(rng.randbytes(64), "big") % ORDER


def hash_to_scalar(*parts: bytes) -> int:
    return int.from_bytes(hashlib.sha256(b"".join(parts)).digest(), "big") % ORDER
