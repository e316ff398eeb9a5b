"""exact-sigma.v1: Pedersen commitment to a hashed value, Schnorr proof of equality.

commitment  C = m*G + r*H, m = SHA-256(value) mod ORDER
randomness  r as a 32-byte big-endian scalar
statement   Equals(candidate): C - m'*G = r*H with m' = SHA-256(candidate)
transcript  t (32) | z (32)
challenge   SHA-256("ssi-ledger/exact-sigma.v1" | C | m' | t | nonce) mod ORDER
"""

from __future__ import annotations

import hashlib

from .. import group
from ..errors import MalformedTranscript, ValueRejectedByBackend
from .core import Equals, SigmaBackend, register_backend
from .sigma import schnorr_check, schnorr_commit, schnorr_respond

DOMAIN_TAG = b"ssi-ledger/exact-sigma.v1"


def value_scalar(value: bytes) -> int:
    return int.from_bytes(hashlib.sha256(value).digest(), "big") % group.ORDER


class ExactSigmaBackend(SigmaBackend):
    format_id = "exact-sigma.v1"

    def check_value(self, value):
        if not value:
            raise ValueRejectedByBackend("empty value")

    def commit_with(self, value: bytes, r: int) -> bytes:
        return group.commit(value_scalar(value), r)

    def commit(self, value, rng):
        r = group.random_scalar(rng)
        return self.commit_with(value, r), group.scalar_bytes(r)

    def opens(self, value, randomness, commitment):
        r = group.decode_scalar(randomness)
        return self.commit_with(value, r) == commitment

    def supports(self, predicate):
        return isinstance(predicate, Equals)

    def holds(self, value, predicate):
        return value == predicate.candidate

    def _statement(self, commitment: bytes, predicate: Equals) -> bytes:
        return group.sub(commitment, group.base_mul(value_scalar(predicate.candidate)))

    def first_move(self, commitment, witness, predicate, rng):
        w, t = schnorr_commit(rng)
        return t, (w, group.decode_scalar(witness.randomness))

    def respond(self, state, challenge):
        w, r = state
        return group.scalar_bytes(schnorr_respond(w, challenge, r))

    def split(self, predicate, transcript):
        if len(transcript) != 64:
            raise MalformedTranscript(f"exact-sigma transcript is 64 bytes, got {len(transcript)}")
        return transcript[:32], transcript[32:]

    def challenge(self, commitment, predicate, move, nonce):
        m = group.scalar_bytes(value_scalar(predicate.candidate))
        return group.hash_to_scalar(DOMAIN_TAG, commitment, m, move, nonce)

    def check(self, commitment, predicate, move, challenge, response):
        c = group.decode_element(commitment)
        t = group.decode_element(move)
        z = group.decode_scalar(response)
        return schnorr_check(self._statement(c, predicate), t, challenge, z)


BACKEND = ExactSigmaBackend()
register_backend(BACKEND)
