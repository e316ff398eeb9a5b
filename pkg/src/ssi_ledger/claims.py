"""Claim metadata: the five-field record binding an attribute to its proof.

Canonical encoding (also the ClaimOrigin block payload)::

    name_len (2 BE) | name UTF-8 | timestamp (8 BE) | validity_term (8 BE)
    | proof_format_len (1) | proof_format ASCII | proof_link (32)
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass

from .encoding import Reader, U64_MAX, lp16, u8, u64
from .errors import DecodeError, InvalidClaim, InvalidValidityTerm
from .identity import KeyPair

MAX_NAME_BYTES = 1024
DIGEST_BYTES = 32


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class Validity(enum.Enum):
    VALID = "Valid"
    EXPIRED = "Expired"


@dataclass(frozen=True)
class ClaimMetadata:
    name: str
    timestamp: int
    validity_term: int
    proof_format: str
    proof_link: bytes

    def problems(self) -> list[str]:
        out = []
        try:
            raw = self.name.encode("utf-8")
        except UnicodeEncodeError:
            return ["name is not valid UTF-8"]
        if not raw:
            out.append("empty name")
        if len(raw) > MAX_NAME_BYTES:
            out.append("name longer than 1024 bytes")
        if not 0 <= self.timestamp <= U64_MAX or not 0 <= self.validity_term <= U64_MAX:
            out.append("timestamp out of range")
        elif self.validity_term != 0 and self.validity_term <= self.timestamp:
            out.append("validity term not after timestamp")
        if not self.proof_format or not self.proof_format.isascii() or len(self.proof_format) > 255:
            out.append("bad proof format id")
        if len(self.proof_link) != DIGEST_BYTES:
            out.append("proof link must be 32 bytes")
        return out

    def check(self) -> None:
        problems = self.problems()
        if problems:
            raise InvalidClaim("; ".join(problems))

    def encode(self) -> bytes:
        """Canonical bytes. Does not validate, so malformed records stay representable."""
        fmt = self.proof_format.encode("ascii")
        return (lp16(self.name.encode("utf-8")) + u64(self.timestamp) + u64(self.validity_term)
                + u8(len(fmt)) + fmt + self.proof_link)

    @classmethod
    def read(cls, r: Reader) -> "ClaimMetadata":
        raw_name = r.lp16()
        timestamp = r.u64()
        term = r.u64()
        fmt = r.take(r.u8())
        link = r.take(DIGEST_BYTES)
        try:
            name = raw_name.decode("utf-8")
            fmt_s = fmt.decode("ascii")
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None
        return cls(name, timestamp, term, fmt_s, link)

    @classmethod
    def decode(cls, data: bytes) -> "ClaimMetadata":
        r = Reader(data)
        md = cls.read(r)
        r.done()
        return md


def metadata_hash(metadata: ClaimMetadata) -> bytes:
    metadata.check()
    return digest(metadata.encode())


def claim_validity(metadata: ClaimMetadata, now: int) -> Validity:
    # valid through validity_term inclusive, void strictly after
    if metadata.validity_term != 0 and now > metadata.validity_term:
        return Validity.EXPIRED
    return Validity.VALID


@dataclass(frozen=True)
class Claim:
    metadata: ClaimMetadata
    owner_public_key: bytes
    commitment: bytes

    def link_ok(self) -> bool:
        return digest(self.commitment) == self.metadata.proof_link


def create_claim(owner: KeyPair, name: str, value: bytes, validity_term: int, proof_format: str,
                 now: int, rng=None):
    """Commit to ``value`` under ``proof_format`` and wrap the commitment in metadata.

    Returns ``(Claim, Witness)``. The witness stays with the owner (and the
    attestor it is disclosed to).
    """
    from . import proofs

    backend = proofs.get_backend(proof_format)
    if validity_term != 0 and validity_term <= now:
        raise InvalidValidityTerm(f"validity term {validity_term} not after now={now}")
    if validity_term < 0:
        raise InvalidValidityTerm("negative validity term")
    commitment, witness = proofs.commit(backend.format_id, value, rng)
    md = ClaimMetadata(name=name, timestamp=now, validity_term=validity_term,
                       proof_format=backend.format_id, proof_link=digest(commitment.data))
    md.check()
    return Claim(md, owner.public_key, commitment.data), witness


__all__ = [
    "Claim", "ClaimMetadata", "Validity", "claim_validity", "create_claim", "digest",
    "metadata_hash",
]
