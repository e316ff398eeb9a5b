"""Proof-format registry and the backend-independent proof operations."""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

from ..encoding import Reader, U64_MAX, lp32, u8, u64
from ..errors import (DecodeError, InvalidPredicate, MalformedTranscript, PredicateFalseForWitness,
                      UnknownProofFormat, UnsupportedPredicate)

NONCE_BYTES = 32

_system_rng = secrets.SystemRandom()


def default_rng(rng=None):
    return _system_rng if rng is None else rng


# -- predicates -------------------------------------------------------------

@dataclass(frozen=True)
class Equals:
    candidate: bytes

    def __post_init__(self):
        if not self.candidate:
            raise InvalidPredicate("Equals candidate must be nonempty")

    def encode(self) -> bytes:
        return u8(0) + lp32(self.candidate)


@dataclass(frozen=True)
class InRange:
    low: int
    high: int

    def __post_init__(self):
        if not (0 <= self.low <= U64_MAX and 0 <= self.high <= U64_MAX):
            raise InvalidPredicate("range bounds must be unsigned 64-bit")
        if self.low > self.high:
            raise InvalidPredicate(f"empty range [{self.low}, {self.high}]")

    def encode(self) -> bytes:
        return u8(1) + u64(self.low) + u64(self.high)


Predicate = Equals | InRange


def read_predicate(r: Reader) -> Predicate:
    kind = r.u8()
    try:
        if kind == 0:
            return Equals(r.lp32())
        if kind == 1:
            return InRange(r.u64(), r.u64())
    except InvalidPredicate as exc:
        raise DecodeError(str(exc)) from None
    raise DecodeError(f"unknown predicate kind {kind}")


def decode_predicate(data: bytes) -> Predicate:
    r = Reader(data)
    p = read_predicate(r)
    r.done()
    return p


# -- value objects ----------------------------------------------------------

@dataclass(frozen=True)
class Commitment:
    format: str
    data: bytes


@dataclass(frozen=True)
class Witness:
    value: bytes
    randomness: bytes = field(repr=False)


@dataclass(frozen=True)
class Proof:
    format: str
    transcript: bytes
    bound_nonce: bytes

    def encode(self) -> bytes:
        fmt = self.format.encode("ascii")
        return u8(len(fmt)) + fmt + self.bound_nonce + lp32(self.transcript)

    @classmethod
    def read(cls, r: Reader) -> "Proof":
        fmt = r.take(r.u8())
        nonce = r.take(NONCE_BYTES)
        transcript = r.lp32()
        try:
            return cls(fmt.decode("ascii"), transcript, nonce)
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from None

    @classmethod
    def decode(cls, data: bytes) -> "Proof":
        r = Reader(data)
        p = cls.read(r)
        r.done()
        return p


# -- backends ---------------------------------------------------------------

class ProofBackend:
    """A proof format. Subclasses fill in commitment, predicate and transcript logic."""

    format_id: str = ""
    interactive: bool = False

    def check_value(self, value: bytes) -> None:
        pass

    def commit(self, value: bytes, rng) -> tuple[bytes, bytes]:
        raise NotImplementedError

    def opens(self, value: bytes, randomness: bytes, commitment: bytes) -> bool:
        raise NotImplementedError

    def supports(self, predicate: Predicate) -> bool:
        raise NotImplementedError

    def holds(self, value: bytes, predicate: Predicate) -> bool:
        raise NotImplementedError

    def prove(self, commitment: bytes, witness: Witness, predicate: Predicate, nonce: bytes,
              rng) -> bytes:
        raise NotImplementedError

    def verify(self, commitment: bytes, predicate: Predicate, transcript: bytes,
               nonce: bytes) -> bool:
        raise NotImplementedError


class SigmaBackend(ProofBackend):
    """Three-move proofs made non-interactive by hashing the first move with the nonce.

    The transcript is ``first_move || response``; the challenge is never
    stored, the verifier recomputes it.
    """

    interactive = True

    def first_move(self, commitment: bytes, witness: Witness, predicate: Predicate, rng):
        raise NotImplementedError

    def respond(self, state, challenge: int) -> bytes:
        raise NotImplementedError

    def split(self, predicate: Predicate, transcript: bytes) -> tuple[bytes, bytes]:
        raise NotImplementedError

    def check(self, commitment: bytes, predicate: Predicate, move: bytes, challenge: int,
              response: bytes) -> bool:
        raise NotImplementedError

    def challenge(self, commitment: bytes, predicate: Predicate, move: bytes, nonce: bytes) -> int:
        raise NotImplementedError

    def prove(self, commitment, witness, predicate, nonce, rng):
        move, state = self.first_move(commitment, witness, predicate, rng)
        return move + self.respond(state, self.challenge(commitment, predicate, move, nonce))

    def verify(self, commitment, predicate, transcript, nonce):
        move, response = self.split(predicate, transcript)
        return self.check(commitment, predicate, move,
                          self.challenge(commitment, predicate, move, nonce), response)


_REGISTRY: dict[str, ProofBackend] = {}


def register_backend(backend: ProofBackend) -> None:
    if backend.format_id in _REGISTRY and _REGISTRY[backend.format_id] is not backend:
        raise ValueError(f"proof format {backend.format_id!r} already registered")
    _REGISTRY[backend.format_id] = backend


def get_backend(format_id: str) -> ProofBackend:
    try:
        return _REGISTRY[format_id]
    except KeyError:
        raise UnknownProofFormat(format_id) from None


def formats() -> list[str]:
    return sorted(_REGISTRY)


# -- operations -------------------------------------------------------------

def commit(format_id: str, value: bytes, rng=None) -> tuple[Commitment, Witness]:
    backend = get_backend(format_id)
    backend.check_value(value)
    data, randomness = backend.commit(bytes(value), default_rng(rng))
    return Commitment(format_id, data), Witness(bytes(value), randomness)


def attestor_check(format_id: str, value: bytes, commitment: Commitment | bytes,
                   witness: Witness) -> bool:
    """Recompute the commitment from the disclosed value and witness randomness."""
    data = commitment.data if isinstance(commitment, Commitment) else commitment
    try:
        backend = get_backend(format_id)
        backend.check_value(value)
    except Exception:
        return False
    if witness.value != value:
        return False
    try:
        return backend.opens(bytes(value), witness.randomness, data)
    except MalformedTranscript:
        return False


def prove(format_id: str, witness: Witness, commitment: Commitment | bytes, predicate: Predicate,
          verifier_nonce: bytes, rng=None) -> Proof:
    backend = get_backend(format_id)
    data = commitment.data if isinstance(commitment, Commitment) else commitment
    if len(verifier_nonce) != NONCE_BYTES:
        raise ValueError("verifier nonce must be 32 bytes")
    if not backend.supports(predicate):
        raise UnsupportedPredicate(f"{type(predicate).__name__} under {format_id}")
    if not backend.holds(witness.value, predicate):
        raise PredicateFalseForWitness(f"refusing to prove a false {type(predicate).__name__}")
    transcript = backend.prove(data, witness, predicate, bytes(verifier_nonce), default_rng(rng))
    return Proof(format_id, transcript, bytes(verifier_nonce))


def verify_proof(format_id: str, commitment: Commitment | bytes, predicate: Predicate, proof: Proof,
                 verifier_nonce: bytes) -> bool:
    """True iff ``proof`` verifies for ``predicate`` under the verifier's own nonce.

    Raises MalformedTranscript when the transcript does not even parse.
    """
    backend = get_backend(format_id)
    data = commitment.data if isinstance(commitment, Commitment) else commitment
    if proof.format != format_id or not backend.supports(predicate):
        return False
    if proof.bound_nonce != verifier_nonce:
        return False
    return backend.verify(data, predicate, proof.transcript, bytes(verifier_nonce))
