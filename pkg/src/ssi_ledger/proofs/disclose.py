"""disclose.v1: salted hash commitment, opened in full to the verifier.

Not zero-knowledge; it is the plain trapdoor for attributes where hiding
the value from the verifier is not wanted.

commitment = SHA-256(salt || value), salt 32 random bytes
randomness = salt
transcript = salt (32) | value_len (4 BE) | value
"""

from __future__ import annotations

import hashlib
import hmac

from ..encoding import Reader, lp32
from ..errors import DecodeError, MalformedTranscript, ValueRejectedByBackend
from .core import Equals, ProofBackend, register_backend

SALT_BYTES = 32


class DiscloseBackend(ProofBackend):
    format_id = "disclose.v1"

    def check_value(self, value):
        if not value:
            raise ValueRejectedByBackend("empty value")

    def commit(self, value, rng):
        salt = rng.randbytes(SALT_BYTES)
        return hashlib.sha256(salt + value).digest(), salt

    def opens(self, value, randomness, commitment):
        if len(randomness) != SALT_BYTES:
            return False
        return hmac.compare_digest(hashlib.sha256(randomness + value).digest(), commitment)

    def supports(self, predicate):
        return isinstance(predicate, Equals)

    def holds(self, value, predicate):
        return value == predicate.candidate

    def prove(self, commitment, witness, predicate, nonce, rng):
        return witness.randomness + lp32(witness.value)

    def verify(self, commitment, predicate, transcript, nonce):
        r = Reader(transcript)
        try:
            salt = r.take(SALT_BYTES)
            value = r.lp32()
            r.done()
        except DecodeError as exc:
            raise MalformedTranscript(str(exc)) from None
        return value == predicate.candidate and self.opens(value, salt, commitment)


BACKEND = DiscloseBackend()
register_backend(BACKEND)
