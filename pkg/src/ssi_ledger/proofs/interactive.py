"""Three-move interactive proof sessions over the sigma backends.

prover -> verifier   first move
verifier -> prover   32 random bytes, read big-endian mod ORDER as the challenge
prover -> verifier   response

Sessions are single use. Any call out of order fails the session for good.
"""

from __future__ import annotations

import enum

from .. import group
from ..errors import OutOfOrderMessage, SessionAlreadyFinished, UnsupportedPredicate
from .core import PredicateFalseForWitness, SigmaBackend, default_rng, get_backend

CHALLENGE_BYTES = 32


class Stage(enum.Enum):
    START = "start"
    COMMITTED = "committed"
    CHALLENGED = "challenged"
    DONE = "done"
    FAILED = "failed"


def _sigma_backend(format_id: str, predicate) -> SigmaBackend:
    backend = get_backend(format_id)
    if not isinstance(backend, SigmaBackend):
        raise UnsupportedPredicate(f"{format_id} has no interactive mode")
    if not backend.supports(predicate):
        raise UnsupportedPredicate(f"{type(predicate).__name__} under {format_id}")
    return backend


class _Session:
    def __init__(self):
        self.stage = Stage.START

    def _advance(self, expected: Stage, new: Stage) -> None:
        if self.stage in (Stage.DONE, Stage.FAILED):
            raise SessionAlreadyFinished(f"session is {self.stage.value}")
        if self.stage is not expected:
            found = self.stage
            self.stage = Stage.FAILED
            raise OutOfOrderMessage(f"expected stage {expected.value}, session is {found.value}")
        self.stage = new


class ProverSession(_Session):
    def __init__(self, format_id, commitment: bytes, witness, predicate, rng=None):
        super().__init__()
        self.backend = _sigma_backend(format_id, predicate)
        if not self.backend.holds(witness.value, predicate):
            raise PredicateFalseForWitness("refusing to prove a false statement")
        self.commitment = commitment
        self.witness = witness
        self.predicate = predicate
        self.rng = default_rng(rng)
        self._state = None

    def commit_move(self) -> bytes:
        self._advance(Stage.START, Stage.COMMITTED)
        move, self._state = self.backend.first_move(self.commitment, self.witness, self.predicate,
                                                    self.rng)
        return move

    def respond(self, challenge: bytes) -> bytes:
        self._advance(Stage.COMMITTED, Stage.DONE)
        if len(challenge) != CHALLENGE_BYTES:
            self.stage = Stage.FAILED
            raise OutOfOrderMessage("challenge must be 32 bytes")
        e = int.from_bytes(challenge, "big") % group.ORDER
        state, self._state = self._state, None
        return self.backend.respond(state, e)


class VerifierSession(_Session):
    def __init__(self, format_id, commitment: bytes, predicate, rng=None):
        super().__init__()
        self.backend = _sigma_backend(format_id, predicate)
        self.commitment = commitment
        self.predicate = predicate
        self.rng = default_rng(rng)
        self.move: bytes | None = None
        self.challenge: bytes | None = None
        self.accepted: bool | None = None

    def receive_commit(self, move: bytes) -> bytes:
        """Store the prover's first move and return a fresh challenge to send back."""
        self._advance(Stage.START, Stage.CHALLENGED)
        self.move = bytes(move)
        self.challenge = self.rng.randbytes(CHALLENGE_BYTES)
        return self.challenge

    def receive_response(self, response: bytes) -> bool:
        self._advance(Stage.CHALLENGED, Stage.DONE)
        e = int.from_bytes(self.challenge, "big") % group.ORDER
        try:
            self.accepted = self.backend.check(self.commitment, self.predicate, self.move, e,
                                               bytes(response))
        except Exception:
            self.accepted = False
        return self.accepted


def interactive_session(role: str, format_id: str, predicate, *, commitment: bytes, witness=None,
                        rng=None):
    if role == "prover":
        return ProverSession(format_id, commitment, witness, predicate, rng)
    if role == "verifier":
        return VerifierSession(format_id, commitment, predicate, rng)
    raise ValueError(f"role must be 'prover' or 'verifier', not {role!r}")
