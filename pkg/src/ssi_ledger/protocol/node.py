"""Protocol peers as message-driven state machines.

A :class:`Peer` plays any role (owner, attestor, verifier, auditor). It never
does I/O itself: ``handle`` takes one incoming frame and returns the frames
to send, so the same peer runs under the local network, the simulator and
a socket transport. Sessions are keyed by the 8-byte session id carried in
every frame; anything arriving out of order ends the session in a failed
state without touching any chain.
"""

from __future__ import annotations

import enum
import hashlib
import secrets
from dataclasses import dataclass, field
from typing import Callable, Optional

from .. import proofs
from ..audit import Presentation, make_snapshot_receipt
from ..chain import (
    BlockPair, BlockType, ClaimOrigin, HalfBlock, Intent, IntentResponse, PersonalBackend,
    PureAttestation, Revocation, Status, countersign, create_proposal, create_single,
)
from ..claims import Claim, ClaimMetadata, Validity, claim_validity, create_claim, digest
from ..encoding import u64
from ..errors import (
    DecodeError, LinkMismatch, MalformedTranscript, NotTheAttestor, OutOfOrderMessage,
    PayloadRejected, SSIError,
)
from ..identity import KeyPair, sign, verify_signature
from .messages import (
    ActiveCheckRequest, ActiveCheckResponse, AttestationAgreement, AttestationProposal,
    AttestationRequest, ClaimPresentation, Escalation, IntentAgreement, IntentProposal,
    KeyOwnershipChallenge, KeyOwnershipResponse, Message, ProofChallenge, ProofCommit,
    ProofMessage, ProofResponse, Reject, RevocationAnnounce, SnapshotReceiptMsg,
    VerificationRequest, decode_frame, encode_frame,
)
from .policy import DEFAULT_SKEW_MS, VerificationOutcome, VerificationPolicy

Outgoing = tuple[bytes, bytes]  # (destination public key, frame)

KEY_CHALLENGE_TAG = b"ssi-ledger/key-ownership.v1"


def key_challenge_message(timestamp: int, nonce: bytes) -> bytes:
    """Canonical bytes signed to prove ownership of a second key."""
    return KEY_CHALLENGE_TAG + u64(timestamp) + nonce


def answer_key_challenge(second_key: KeyPair, timestamp: int, nonce: bytes) -> bytes:
    return sign(second_key, key_challenge_message(timestamp, nonce))


def check_key_response(second_public_key: bytes, timestamp: int, nonce: bytes, signature: bytes,
                       now: int, skew_ms: int = DEFAULT_SKEW_MS) -> bool:
    if abs(now - timestamp) > skew_ms:
        return False
    try:
        return verify_signature(second_public_key, key_challenge_message(timestamp, nonce), signature)
    except SSIError:
        return False


@dataclass
class Behavior:
    """Switches for scripted misbehaviour. All off means honest."""

    decline_attestation: bool = False  # owner withholds the countersignature on attestations
    decline_intent: bool = False       # owner refuses to countersign intent blocks
    refuse_attest: bool = False        # attestor rejects every attestation request
    replay_proof: bool = False         # owner resends the previous session's proof
    replay_intent: bool = False        # owner resends the previous session's intent agreement


@dataclass
class OwnedClaim:
    claim: Claim
    witness: proofs.Witness
    origin: Optional[BlockPair] = None
    attestations: list[BlockPair] = field(default_factory=list)

    @property
    def metadata_block_hash(self) -> Optional[bytes]:
        return self.origin.agreement.hash if self.origin else None

    def attestors(self) -> list[bytes]:
        out = []
        for pair in [self.origin, *self.attestations]:
            if pair is not None and pair.proposal.public_key not in out:
                out.append(pair.proposal.public_key)
        return out


@dataclass
class SessionResult:
    session_id: bytes
    kind: str
    ok: bool
    error: Optional[str] = None
    outcome: Optional[VerificationOutcome] = None
    detail: object = None


class _S(enum.Enum):
    WAIT_PROPOSAL = "wait-proposal"
    WAIT_AGREEMENT = "wait-agreement"
    WAIT_PRESENTATION = "wait-presentation"
    WAIT_INTENT = "wait-intent"
    WAIT_INTENT_AGREEMENT = "wait-intent-agreement"
    WAIT_RECEIPT = "wait-receipt"
    WAIT_ACTIVE = "wait-active"
    WAIT_PROOF = "wait-proof"
    WAIT_COMMIT = "wait-commit"
    WAIT_CHALLENGE = "wait-challenge"
    WAIT_RESPONSE = "wait-response"
    WAIT_COPY = "wait-copy"
    WAIT_KEY = "wait-key"


@dataclass
class _Session:
    sid: bytes
    kind: str
    peer: bytes
    state: _S
    data: dict = field(default_factory=dict)


def _pair_problems_as(pair: BlockPair, block_type: BlockType, owner: bytes) -> bool:
    return bool(pair.problems()) or pair.agreement.block_type != block_type \
        or pair.agreement.public_key != owner


class Peer:
    def __init__(self, key: KeyPair, backend: PersonalBackend | None = None, *, rng=None,
                 name: str | None = None, behavior: Behavior | None = None):
        self.key = key
        self.pk = key.public_key
        self.backend = backend if backend is not None else PersonalBackend()
        self.rng = rng if rng is not None else secrets.SystemRandom()
        self.name = name or key.short
        self.behavior = behavior or Behavior()
        self.directory: dict[bytes, str] = {}
        self.claims: dict[str, OwnedClaim] = {}
        self.pending_claims: dict[str, tuple[Claim, proofs.Witness]] = {}
        self.attested: dict[bytes, HalfBlock] = {}
        self.revoked: dict[bytes, HalfBlock] = {}
        self.known_revocations: dict[bytes, list[HalfBlock]] = {}
        self.presentations: list[Presentation] = []
        self.extra_keys: dict[bytes, KeyPair] = {}
        self.results: dict[bytes, SessionResult] = {}
        self.accept_attestation: Callable[[HalfBlock], bool] = lambda block: True
        self._sessions: dict[bytes, _Session] = {}
        self._counter = 0
        self._last_proof: Optional[proofs.Proof] = None
        self._last_intent: Optional[HalfBlock] = None

    # -- helpers -------------------------------------------------------------
    def _new_sid(self) -> bytes:
        self._counter += 1
        return hashlib.sha256(self.pk + u64(self._counter)).digest()[:8]

    def _send(self, dest: bytes, sid: bytes, msg: Message) -> Outgoing:
        return dest, encode_frame(sid, msg)

    def _finish(self, s: _Session, ok: bool, error: str | None = None, outcome=None,
                detail=None) -> None:
        self._sessions.pop(s.sid, None)
        self.results[s.sid] = SessionResult(s.sid, s.kind, ok, error, outcome, detail)

    def open_sessions(self) -> list[bytes]:
        return list(self._sessions)

    def add_peer(self, public_key: bytes, name: str) -> None:
        if public_key != self.pk:
            self.directory[public_key] = name

    # -- starting sessions ---------------------------------------------------
    def begin_attestation(self, attestor: bytes, name: str, value: bytes, proof_format: str,
                          validity_term: int, now: int) -> tuple[bytes, list[Outgoing]]:
        """Ask ``attestor`` to attest a claim. An existing claim with this name gets a pure attestation."""
        existing = self.claims.get(name)
        if existing is not None and existing.origin is not None:
            claim, witness, origin = existing.claim, existing.witness, existing.origin.agreement
        elif name in self.pending_claims:
            (claim, witness), origin = self.pending_claims[name], None
        else:
            claim, witness = create_claim(self.key, name, value, validity_term, proof_format, now,
                                          self.rng)
            origin = None
        sid = self._new_sid()
        self._sessions[sid] = _Session(sid, "attest", attestor, _S.WAIT_PROPOSAL,
                                       {"claim": claim, "witness": witness, "origin": origin})
        req = AttestationRequest(claim.metadata, witness.value, claim.commitment, witness.randomness,
                                 origin)
        return sid, [self._send(attestor, sid, req)]

    def begin_verification(self, owner: bytes, name: str, predicate: proofs.Predicate,
                           policy: VerificationPolicy, now: int) -> tuple[bytes, list[Outgoing]]:
        sid = self._new_sid()
        nonce = self.rng.randbytes(proofs.NONCE_BYTES)
        req = VerificationRequest(name, predicate, nonce, policy.escalation, policy.interactive)
        self._sessions[sid] = _Session(sid, "verify", owner, _S.WAIT_PRESENTATION,
                                       {"request": req, "policy": policy, "reasons": set(),
                                        "responses": {}})
        return sid, [self._send(owner, sid, req)]

    def begin_key_challenge(self, owner: bytes, second_key: bytes, now: int,
                            skew_ms: int = DEFAULT_SKEW_MS) -> tuple[bytes, list[Outgoing]]:
        sid = self._new_sid()
        ch = KeyOwnershipChallenge(now, self.rng.randbytes(32), second_key)
        self._sessions[sid] = _Session(sid, "key", owner, _S.WAIT_KEY,
                                       {"challenge": ch, "skew": skew_ms})
        return sid, [self._send(owner, sid, ch)]

    def revoke(self, metadata_block_hash: bytes, now: int) -> tuple[HalfBlock, list[Outgoing]]:
        """Append a revocation of our attestation and announce it to every known peer."""
        if metadata_block_hash not in self.attested:
            raise NotTheAttestor("this identity never attested that claim")
        block = create_single(self.key, Revocation(metadata_block_hash, now),
                              self.backend.tail(self.pk), now)
        self.backend.add_own(block)
        self.backend.publish([block], now)
        self.revoked[metadata_block_hash] = block
        self.known_revocations.setdefault(metadata_block_hash, []).append(block)
        sid = self._new_sid()
        self.results[sid] = SessionResult(sid, "revoke", True, detail=block)
        return block, [self._send(pk, sid, RevocationAnnounce(block)) for pk in sorted(self.directory)]

    # -- event entry points --------------------------------------------------
    def handle(self, src: bytes, frame: bytes, now: int) -> list[Outgoing]:
        try:
            env = decode_frame(frame)
        except DecodeError:
            sid = frame[5:13]
            s = self._sessions.get(sid)
            if s is not None and s.peer == src:
                return self._violation(s, now)
            return []
        sid, msg = env.session_id, env.message
        s = self._sessions.get(sid)
        try:
            if s is None:
                return self._unsolicited(src, sid, msg, now)
            if (s.kind == "present" and src in s.data.get("pending", ())
                    and isinstance(msg, (ActiveCheckResponse, Reject))):
                return self._present_active_response(s, src, msg, now)
            if src != s.peer:
                return []
            return self._dispatch(s, msg, now)
        except (OutOfOrderMessage, MalformedTranscript, PayloadRejected, LinkMismatch):
            if s is not None:
                return self._violation(s, now)
            return []

    def unreachable(self, dest: bytes, frame: bytes, now: int) -> list[Outgoing]:
        """The transport could not reach ``dest`` with ``frame``."""
        sid = frame[5:13]
        s = self._sessions.get(sid)
        if s is None:
            return []
        if s.kind == "present" and s.state is _S.WAIT_ACTIVE and dest in s.data["pending"]:
            return self._present_active_response(
                s, dest, ActiveCheckResponse(dest, False), now)
        if s.kind == "verify":
            return self._verify_finish(s, now, {"Timeout"}, error="Timeout")
        self._finish(s, False, "Timeout")
        return []

    def expire(self, now: int) -> None:
        """Close every open session as timed out."""
        for s in list(self._sessions.values()):
            if s.kind == "verify":
                self._verify_finish(s, now, {"Timeout"}, error="Timeout")
            else:
                self._finish(s, False, "Timeout")

    def _violation(self, s: _Session, now: int) -> list[Outgoing]:
        out = [self._send(s.peer, s.sid, Reject("ProtocolViolation"))]
        if s.kind == "verify":
            self._verify_finish(s, now, {"ProtocolViolation"}, error="ProtocolViolation")
        else:
            self._finish(s, False, "ProtocolViolation")
        return out

    def _unsolicited(self, src: bytes, sid: bytes, msg: Message, now: int) -> list[Outgoing]:
        if isinstance(msg, AttestationRequest):
            return self._attestor_request(src, sid, msg, now)
        if isinstance(msg, VerificationRequest):
            return self._present_request(src, sid, msg, now)
        if isinstance(msg, ActiveCheckRequest):
            return self._attestor_active_check(src, sid, msg, now)
        if isinstance(msg, RevocationAnnounce):
            self._receive_revocation(msg.block)
            return []
        if isinstance(msg, KeyOwnershipChallenge):
            key = self.extra_keys.get(msg.second_key)
            if key is None and msg.second_key == self.pk:
                key = self.key
            if key is None:
                return [self._send(src, sid, Reject("UnknownKey"))]
            return [self._send(src, sid, KeyOwnershipResponse(
                answer_key_challenge(key, msg.timestamp, msg.nonce)))]
        return []

    def _dispatch(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        if s.kind == "attest":
            return self._owner_attest_step(s, msg, now)
        if s.kind == "attestor":
            return self._attestor_step(s, msg, now)
        if s.kind == "present":
            return self._present_step(s, msg, now)
        if s.kind == "verify":
            return self._verify_step(s, msg, now)
        if s.kind == "active":
            return self._attestor_active_copy(s, msg, now)
        if s.kind == "key":
            return self._key_step(s, msg, now)
        raise OutOfOrderMessage(s.kind)

    # -- revocations ---------------------------------------------------------
    def _receive_revocation(self, block: HalfBlock) -> None:
        if block.block_type != BlockType.REVOCATION or block.problems():
            return
        self.backend.add_copy(block)
        known = self.known_revocations.setdefault(block.payload.metadata_block_hash, [])
        if all(b.hash != block.hash for b in known):
            known.append(block)

    # -- attestation: owner side ---------------------------------------------
    def _owner_attest_step(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        if isinstance(msg, Reject):
            self._finish(s, False, msg.reason if msg.reason else "AttestorRejected")
            return []
        if s.state is not _S.WAIT_PROPOSAL or not isinstance(msg, AttestationProposal):
            raise OutOfOrderMessage("unexpected message in attestation")
        claim: Claim = s.data["claim"]
        origin: Optional[HalfBlock] = s.data["origin"]
        want = (PureAttestation(origin.hash) if origin is not None else ClaimOrigin(claim.metadata))
        proposal = msg.block
        if proposal.public_key != s.peer or proposal.payload != want:
            raise PayloadRejected("proposal does not carry the requested claim")
        if self.behavior.decline_attestation or not self.accept_attestation(proposal):
            self._finish(s, False, "OwnerDeclined")
            return [self._send(s.peer, s.sid, Reject("OwnerDeclined"))]
        try:
            pair = countersign(self.key, proposal, self.backend.tail(self.pk), now)
        except SSIError:
            raise PayloadRejected("bad proposal") from None
        self.backend.add_own(pair.agreement)
        self.backend.add_copy(pair.proposal)
        self.backend.publish_pair(pair, now)
        if origin is None:
            self.claims[claim.metadata.name] = OwnedClaim(claim, s.data["witness"], pair)
            self.pending_claims.pop(claim.metadata.name, None)
        else:
            self.claims[claim.metadata.name].attestations.append(pair)
        self._finish(s, True, detail=pair)
        return [self._send(s.peer, s.sid, AttestationAgreement(pair.agreement))]

    # -- attestation: attestor side ------------------------------------------
    def _attestor_request(self, src: bytes, sid: bytes, msg: AttestationRequest,
                          now: int) -> list[Outgoing]:
        s = _Session(sid, "attestor", src, _S.WAIT_AGREEMENT)
        md = msg.metadata
        ok = (not self.behavior.refuse_attest and not md.problems()
              and digest(msg.commitment) == md.proof_link
              and proofs.attestor_check(md.proof_format, msg.value,
                                        proofs.Commitment(md.proof_format, msg.commitment),
                                        proofs.Witness(msg.value, msg.randomness)))
        if ok and msg.origin is not None:
            o = msg.origin
            ok = (o.signature_ok() and o.block_type == BlockType.CLAIM_ORIGIN and o.public_key == src
                  and o.is_agreement and o.payload.metadata == md)
        if not ok:
            self.results[sid] = SessionResult(sid, "attestor", False, "AttestorRejected")
            return [self._send(src, sid, Reject("AttestorRejected"))]
        payload = PureAttestation(msg.origin.hash) if msg.origin is not None else ClaimOrigin(md)
        proposal = create_proposal(self.key, src, payload, self.backend.tail(self.pk), now)
        self.backend.add_own(proposal)
        s.data["proposal"] = proposal
        self._sessions[sid] = s
        return [self._send(src, sid, AttestationProposal(proposal))]

    def _attestor_step(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        if isinstance(msg, Reject):
            self._finish(s, False, msg.reason or "OwnerDeclined")
            return []
        if not isinstance(msg, AttestationAgreement):
            raise OutOfOrderMessage("expected the agreement half")
        pair = BlockPair(s.data["proposal"], msg.block)
        if _pair_problems_as(pair, pair.proposal.block_type, s.peer):
            raise PayloadRejected("agreement does not match the proposal")
        self.backend.add_copy(pair.agreement)
        p = pair.agreement.payload
        ref = pair.agreement.hash if isinstance(p, ClaimOrigin) else p.metadata_block_hash
        self.attested[ref] = pair.agreement
        self._finish(s, True, detail=pair)
        return []

    # -- verification: owner side --------------------------------------------
    def _present_request(self, src: bytes, sid: bytes, msg: VerificationRequest,
                         now: int) -> list[Outgoing]:
        owned = self.claims.get(msg.name)
        if owned is None or owned.origin is None:
            self.results[sid] = SessionResult(sid, "present", False, "UnknownClaim")
            return [self._send(src, sid, Reject("UnknownClaim"))]
        s = _Session(sid, "present", src, _S.WAIT_INTENT, {"request": msg, "claim": owned})
        self._sessions[sid] = s
        pres = ClaimPresentation(owned.origin, tuple(owned.attestations), owned.claim.commitment)
        out = [self._send(src, sid, pres)]
        if msg.escalation is Escalation.PASSIVE:
            out += self._present_proof(s, now)
        return out

    def _present_proof(self, s: _Session, now: int) -> list[Outgoing]:
        req: VerificationRequest = s.data["request"]
        owned: OwnedClaim = s.data["claim"]
        fmt = owned.claim.metadata.proof_format
        if req.interactive:
            try:
                prover = proofs.ProverSession(fmt, owned.claim.commitment, owned.witness,
                                              req.predicate, self.rng)
                move = prover.commit_move()
            except SSIError as exc:
                self._finish(s, False, exc.name)
                return [self._send(s.peer, s.sid, Reject(exc.name))]
            s.data["prover"] = prover
            s.state = _S.WAIT_CHALLENGE
            return [self._send(s.peer, s.sid, ProofCommit(move))]
        if self.behavior.replay_proof and self._last_proof is not None:
            proof = self._last_proof
        else:
            try:
                proof = proofs.prove(fmt, owned.witness, owned.claim.commitment, req.predicate,
                                     req.nonce, self.rng)
            except SSIError as exc:
                self._finish(s, False, exc.name)
                return [self._send(s.peer, s.sid, Reject(exc.name))]
        self._last_proof = proof
        self._finish(s, True)
        return [self._send(s.peer, s.sid, ProofMessage(proof))]

    def _present_step(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        if isinstance(msg, Reject):
            self._finish(s, False, msg.reason)
            return []
        req: VerificationRequest = s.data["request"]
        owned: OwnedClaim = s.data["claim"]
        if s.state is _S.WAIT_CHALLENGE and isinstance(msg, ProofChallenge):
            response = s.data["prover"].respond(msg.challenge)
            self._finish(s, True)
            return [self._send(s.peer, s.sid, ProofResponse(response))]
        if s.state is not _S.WAIT_INTENT or not isinstance(msg, IntentProposal):
            raise OutOfOrderMessage("unexpected message while presenting")
        proposal = msg.block
        p = proposal.payload
        if (proposal.public_key != s.peer or not isinstance(p, Intent)
                or p.metadata_block_hash != owned.metadata_block_hash or p.challenge_nonce != req.nonce):
            raise PayloadRejected("intent does not match this session")
        if self.behavior.replay_intent and self._last_intent is not None:
            agreement = self._last_intent
        elif self.behavior.decline_intent:
            self._finish(s, False, "OwnerRefusedIntent")
            return [self._send(s.peer, s.sid, Reject("OwnerRefusedIntent"))]
        else:
            try:
                pair = countersign(self.key, proposal, self.backend.tail(self.pk), now)
            except SSIError:
                raise PayloadRejected("bad intent proposal") from None
            self.backend.add_own(pair.agreement)
            self.backend.add_copy(pair.proposal)
            self.backend.publish_pair(pair, now)
            agreement = pair.agreement
            self._last_intent = agreement
        s.data["intent"] = agreement
        receipt = make_snapshot_receipt(self.key, self.backend, now)
        out = [self._send(s.peer, s.sid, IntentAgreement(agreement)),
               self._send(s.peer, s.sid, SnapshotReceiptMsg(receipt))]
        if req.escalation is Escalation.ACTIVE:
            s.state = _S.WAIT_ACTIVE
            pending = owned.attestors()
            s.data["pending"] = list(pending)
            check = ActiveCheckRequest(owned.metadata_block_hash, req.nonce,
                                       agreement.payload.intent_timestamp, agreement)
            out += [self._send(a, s.sid, check) for a in pending]
        else:
            out += self._present_proof(s, now)
        return out

    def _present_active_response(self, s: _Session, src: bytes, msg: ActiveCheckResponse | Reject,
                                 now: int) -> list[Outgoing]:
        if s.state is not _S.WAIT_ACTIVE or src not in s.data["pending"]:
            return []
        if isinstance(msg, Reject):
            msg = ActiveCheckResponse(src, True)
        s.data["pending"].remove(src)
        out = []
        forward = ActiveCheckResponse(src, msg.reached)
        proposal = msg.proposal
        if msg.reached and proposal is not None:
            p = proposal.payload
            if (proposal.public_key == src and isinstance(p, IntentResponse)
                    and p.intent_block_hash == s.data["intent"].hash):
                try:
                    pair = countersign(self.key, proposal, self.backend.tail(self.pk), now)
                except SSIError:
                    pair = None
                if pair is not None:
                    self.backend.add_own(pair.agreement)
                    self.backend.add_copy(pair.proposal)
                    self.backend.publish_pair(pair, now)
                    forward = ActiveCheckResponse(src, True, pair.proposal, pair.agreement)
                    out.append(self._send(src, s.sid, forward))
        out.append(self._send(s.peer, s.sid, forward))
        if not s.data["pending"]:
            out += self._present_proof(s, now)
        return out

    # -- verification: attestor side of the active check ---------------------
    def _attestor_active_check(self, src: bytes, sid: bytes, msg: ActiveCheckRequest,
                               now: int) -> list[Outgoing]:
        ib = msg.intent_block
        p = ib.payload
        ok = (ib.signature_ok() and ib.public_key == src and isinstance(p, Intent)
              and p.metadata_block_hash == msg.metadata_block_hash
              and p.challenge_nonce == msg.challenge_nonce
              and p.intent_timestamp == msg.intent_timestamp)
        if not ok or msg.metadata_block_hash not in self.attested:
            return [self._send(src, sid, Reject("UnknownClaim"))]
        status = Status.REVOKED if msg.metadata_block_hash in self.revoked else Status.CURRENT
        proposal = create_proposal(self.key, src, IntentResponse(ib.hash, status, now),
                                   self.backend.tail(self.pk), now)
        self.backend.add_own(proposal)
        self._sessions[sid] = _Session(sid, "active", src, _S.WAIT_COPY, {"proposal": proposal})
        return [self._send(src, sid, ActiveCheckResponse(self.pk, True, proposal, None))]

    def _attestor_active_copy(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        if not isinstance(msg, ActiveCheckResponse) or msg.agreement is None:
            raise OutOfOrderMessage("expected the countersigned response")
        pair = BlockPair(s.data["proposal"], msg.agreement)
        if _pair_problems_as(pair, BlockType.INTENT_RESPONSE, s.peer):
            raise PayloadRejected("agreement does not match the response")
        self.backend.add_copy(msg.agreement)
        self._finish(s, True, detail=pair)
        return []

    # -- verification: verifier side -----------------------------------------
    def _verify_step(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        d = s.data
        req: VerificationRequest = d["request"]
        policy: VerificationPolicy = d["policy"]
        if isinstance(msg, Reject):
            reason = msg.reason if msg.reason else "ProtocolViolation"
            return self._verify_finish(s, now, {reason}, error=reason)
        if s.state is _S.WAIT_PRESENTATION and isinstance(msg, ClaimPresentation):
            d["presentation"] = msg
            if req.escalation is Escalation.PASSIVE:
                s.state = _S.WAIT_COMMIT if req.interactive else _S.WAIT_PROOF
                return []
            intent = Intent(msg.origin.agreement.hash, req.nonce, now)
            proposal = create_proposal(self.key, s.peer, intent, self.backend.tail(self.pk), now)
            self.backend.add_own(proposal)
            d["intent_proposal"] = proposal
            s.state = _S.WAIT_INTENT_AGREEMENT
            return [self._send(s.peer, s.sid, IntentProposal(proposal))]
        if s.state is _S.WAIT_INTENT_AGREEMENT and isinstance(msg, IntentAgreement):
            ag, prop = msg.block, d["intent_proposal"]
            if not ag.signature_ok() or ag.public_key != s.peer:
                d["reasons"].add("BadSignature")
            elif BlockPair(prop, ag).problems() or ag.block_type != BlockType.INTENT:
                d["reasons"].add("StaleIntent")
            else:
                self.backend.add_copy(ag)
            d["intent"] = ag
            s.state = _S.WAIT_RECEIPT
            return []
        if s.state is _S.WAIT_RECEIPT and isinstance(msg, SnapshotReceiptMsg):
            r = msg.receipt
            ag = d["intent"]
            intent_ts = d["intent_proposal"].payload.intent_timestamp
            if (r.owner_public_key != s.peer or not r.covers(ag.hash)
                    or r.receipt_timestamp < intent_ts
                    or abs(now - r.receipt_timestamp) > policy.clock_skew_ms):
                d["reasons"].add("BadReceipt")
            if r.owner_public_key == s.peer and r.signature_ok():
                self.presentations.append(Presentation(r, d["presentation"].origin.agreement.hash))
            d["receipt"] = r
            if req.escalation is Escalation.ACTIVE:
                d["expected"] = len(self._attestors_of(d["presentation"]))
                s.state = _S.WAIT_ACTIVE
            else:
                s.state = _S.WAIT_COMMIT if req.interactive else _S.WAIT_PROOF
            return []
        if s.state is _S.WAIT_ACTIVE and isinstance(msg, ActiveCheckResponse):
            d["responses"][msg.attestor] = msg
            if msg.agreement is not None and msg.agreement.signature_ok():
                self.backend.add_copy(msg.agreement)
            if len(d["responses"]) >= d["expected"]:
                s.state = _S.WAIT_COMMIT if req.interactive else _S.WAIT_PROOF
            return []
        if s.state is _S.WAIT_PROOF and isinstance(msg, ProofMessage):
            pres: ClaimPresentation = d["presentation"]
            fmt = pres.origin.agreement.payload.metadata.proof_format
            try:
                ok = proofs.verify_proof(fmt, proofs.Commitment(fmt, pres.commitment), req.predicate,
                                         msg.proof, req.nonce)
            except (SSIError, ValueError):
                ok = False
            return self._verify_finish(s, now, set() if ok else {"ProofInvalid"})
        if s.state is _S.WAIT_COMMIT and isinstance(msg, ProofCommit):
            pres = d["presentation"]
            fmt = pres.origin.agreement.payload.metadata.proof_format
            try:
                verifier = proofs.VerifierSession(fmt, pres.commitment, req.predicate, self.rng)
                challenge = verifier.receive_commit(msg.move)
            except SSIError:
                return self._verify_finish(s, now, {"ProofInvalid"})
            d["verifier"] = verifier
            s.state = _S.WAIT_RESPONSE
            return [self._send(s.peer, s.sid, ProofChallenge(challenge))]
        if s.state is _S.WAIT_RESPONSE and isinstance(msg, ProofResponse):
            try:
                ok = d["verifier"].receive_response(msg.response)
            except SSIError:
                ok = False
            return self._verify_finish(s, now, set() if ok else {"ProofInvalid"})
        raise OutOfOrderMessage(f"{type(msg).__name__} in state {s.state.value}")

    @staticmethod
    def _attestors_of(pres: ClaimPresentation) -> list[bytes]:
        out = []
        for pair in (pres.origin, *pres.attestations):
            if pair.proposal.public_key not in out:
                out.append(pair.proposal.public_key)
        return out

    def _verify_finish(self, s: _Session, now: int, extra: set,
                       error: str | None = None) -> list[Outgoing]:
        d = s.data
        reasons = set(d["reasons"]) | extra
        if "presentation" in d and error is None:
            reasons |= self._presentation_reasons(s, d["presentation"], now)
        outcome = VerificationOutcome.from_reasons(reasons)
        self._finish(s, error is None, error, outcome)
        return []

    def _presentation_reasons(self, s: _Session, pres: ClaimPresentation, now: int) -> set[str]:
        d = s.data
        req: VerificationRequest = d["request"]
        policy: VerificationPolicy = d["policy"]
        reasons: set[str] = set()
        origin = pres.origin
        if _pair_problems_as(origin, BlockType.CLAIM_ORIGIN, s.peer):
            return {"BadSignature"}
        md: ClaimMetadata = origin.agreement.payload.metadata
        origin_hash = origin.agreement.hash
        if md.name != req.name:
            reasons.add("WrongClaim")
        attestors = [origin.proposal.public_key]
        for pair in pres.attestations:
            if (_pair_problems_as(pair, BlockType.PURE_ATTESTATION, s.peer)
                    or pair.agreement.payload.metadata_block_hash != origin_hash):
                reasons.add("BadSignature")
            elif pair.proposal.public_key not in attestors:
                attestors.append(pair.proposal.public_key)
        revoked_by = {b.public_key for b in self.known_revocations.get(origin_hash, [])}
        if any(a in revoked_by for a in attestors):
            reasons.add("RevokedAttestation")
        counted = [a for a in attestors if a in policy.trusted_attestors]
        if req.escalation is Escalation.ACTIVE:
            counted = self._active_reasons(s, counted, reasons, now)
        counted = [a for a in counted if a not in revoked_by]
        if len(counted) < policy.minimum_attestations:
            if any(a not in policy.trusted_attestors for a in attestors):
                reasons.add("UntrustedAttestor")
            reasons.add("InsufficientAttestations")
        if claim_validity(md, now) is Validity.EXPIRED:
            reasons.add("Expired")
        if digest(pres.commitment) != md.proof_link:
            reasons.add("ProofLinkMismatch")
        return reasons

    def _active_reasons(self, s: _Session, counted: list[bytes], reasons: set[str],
                        now: int) -> list[bytes]:
        d = s.data
        policy: VerificationPolicy = d["policy"]
        intent = d.get("intent")
        current = []
        for attestor in counted:
            resp: Optional[ActiveCheckResponse] = d["responses"].get(attestor)
            if resp is None or not resp.reached:
                reasons.add("AttestorOffline")
                continue
            pair = resp.pair
            if pair is None or _pair_problems_as(pair, BlockType.INTENT_RESPONSE, s.peer) \
                    or pair.proposal.public_key != attestor:
                reasons.add("StaleResponse")
                continue
            p: IntentResponse = pair.agreement.payload
            if (intent is None or p.intent_block_hash != intent.hash
                    or abs(now - p.response_timestamp) > policy.clock_skew_ms):
                reasons.add("StaleResponse")
                continue
            if p.status is Status.REVOKED:
                reasons.add("RevokedAtSource")
                continue
            current.append(attestor)
        return current

    # -- key ownership -------------------------------------------------------
    def _key_step(self, s: _Session, msg: Message, now: int) -> list[Outgoing]:
        ch: KeyOwnershipChallenge = s.data["challenge"]
        if isinstance(msg, KeyOwnershipResponse):
            ok = check_key_response(ch.second_key, ch.timestamp, ch.nonce, msg.signature, now,
                                    s.data["skew"])
            self._finish(s, True, detail=ok)
            return []
        if isinstance(msg, Reject):
            self._finish(s, True, detail=False)
            return []
        raise OutOfOrderMessage("expected a key ownership response")

