"""Zero-latency in-process network and the flow-level API on top of it.

Messages are delivered in FIFO order at the current clock value. A frame
addressed to an offline or unknown peer bounces back to its sender as
unreachable. When the queue drains, any session still open is closed as
timed out.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from ..chain import BlockPair, HalfBlock
from ..errors import (
    AttestorRejected, OwnerDeclined, OwnerRefusedIntent, ProtocolViolation, SSIError, Timeout,
    UnknownClaim,
)
from ..proofs import Predicate
from .messages import Escalation, frame_session, frame_type
from .node import Outgoing, Peer, SessionResult
from .policy import VerificationOutcome, VerificationPolicy


@dataclass(frozen=True)
class Delivery:
    src: bytes
    dst: bytes
    frame: bytes
    delivered: bool


class LocalNetwork:
    def __init__(self, peers: Iterable[Peer] = (), now: int = 0):
        self.peers: dict[bytes, Peer] = {}
        self.offline: set[bytes] = set()
        self.now = now
        self.log: list[Delivery] = []
        self._queue: deque[tuple[bytes, bytes, bytes]] = deque()
        for p in peers:
            self.add(p)

    def add(self, peer: Peer) -> Peer:
        for other in self.peers.values():
            other.add_peer(peer.pk, peer.name)
            peer.add_peer(other.pk, other.name)
        self.peers[peer.pk] = peer
        return peer

    def send(self, src: bytes, outgoing: Iterable[Outgoing]) -> None:
        for dst, frame in outgoing:
            self._queue.append((src, dst, frame))

    def run(self, expire: bool = True) -> None:
        while self._queue:
            src, dst, frame = self._queue.popleft()
            target = self.peers.get(dst)
            if target is None or dst in self.offline:
                self.log.append(Delivery(src, dst, frame, False))
                sender = self.peers.get(src)
                if sender is not None:
                    self.send(src, sender.unreachable(dst, frame, self.now))
                continue
            self.log.append(Delivery(src, dst, frame, True))
            self.send(dst, target.handle(src, frame, self.now))
        if expire:
            for p in self.peers.values():
                p.expire(self.now)

    def session_log(self, session_id: bytes) -> list[Delivery]:
        return [d for d in self.log if frame_session(d.frame) == session_id]

    def edges(self, session_id: bytes | None = None) -> list[tuple[bytes, bytes, str]]:
        logs = self.log if session_id is None else self.session_log(session_id)
        return [(d.src, d.dst, frame_type(d.frame).name) for d in logs]


def _network_for(peers: list[Peer], network: Optional[LocalNetwork], now: int) -> LocalNetwork:
    if network is None:
        network = LocalNetwork(now=now)
        for p in peers:
            network.add(p)
    network.now = now
    return network


_ERRORS = {
    "AttestorRejected": AttestorRejected, "OwnerDeclined": OwnerDeclined, "Timeout": Timeout,
    "OwnerRefusedIntent": OwnerRefusedIntent, "ProtocolViolation": ProtocolViolation,
    "UnknownClaim": UnknownClaim,
}


def _raise_for(result: Optional[SessionResult]) -> None:
    if result is None:
        raise Timeout("session did not finish")
    if not result.ok:
        raise _ERRORS.get(result.error, SSIError)(result.error or "session failed")


def attestation_flow(owner: Peer, attestor: Peer, name: str, value: bytes, proof_format: str,
                     validity_term: int, now: int, network: LocalNetwork | None = None) -> BlockPair:
    """Run one attestation; returns the pair appended to the owner's chain."""
    net = _network_for([owner, attestor], network, now)
    sid, out = owner.begin_attestation(attestor.pk, name, value, proof_format, validity_term, now)
    net.send(owner.pk, out)
    net.run()
    result = owner.results.get(sid)
    _raise_for(result)
    return result.detail


def _verify(verifier: Peer, owner: Peer, policy: VerificationPolicy, name: str,
            predicate: Predicate, now: int, network: LocalNetwork | None,
            extra: list[Peer]) -> tuple[bytes, SessionResult]:
    net = _network_for([verifier, owner, *extra], network, now)
    sid, out = verifier.begin_verification(owner.pk, name, predicate, policy, now)
    net.send(verifier.pk, out)
    net.run()
    result = verifier.results.get(sid)
    if result is None:
        raise Timeout("verification did not finish")
    if result.error in ("OwnerRefusedIntent", "ProtocolViolation"):
        _raise_for(result)
    return sid, result


def verify_passive(verifier: Peer, owner: Peer, policy: VerificationPolicy, name: str,
                   predicate: Predicate, now: int, network: LocalNetwork | None = None
                   ) -> VerificationOutcome:
    policy = _with_escalation(policy, Escalation.PASSIVE)
    return _verify(verifier, owner, policy, name, predicate, now, network, [])[1].outcome


def verify_intent(verifier: Peer, owner: Peer, policy: VerificationPolicy, name: str,
                  predicate: Predicate, now: int, network: LocalNetwork | None = None):
    """Returns ``(outcome, receipt)``; the receipt is None if the owner never sent one."""
    policy = _with_escalation(policy, Escalation.INTENT)
    sid, result = _verify(verifier, owner, policy, name, predicate, now, network, [])
    receipt = next((p.receipt for p in reversed(verifier.presentations)
                    if p.receipt.owner_public_key == owner.pk), None)
    return result.outcome, receipt


def verify_active(verifier: Peer, owner: Peer, attestors: Iterable[Peer], policy: VerificationPolicy,
                  name: str, predicate: Predicate, now: int, network: LocalNetwork | None = None
                  ) -> VerificationOutcome:
    policy = _with_escalation(policy, Escalation.ACTIVE)
    return _verify(verifier, owner, policy, name, predicate, now, network, list(attestors))[1].outcome


def revoke(attestor: Peer, metadata_block_hash: bytes, now: int,
           network: LocalNetwork | None = None) -> HalfBlock:
    net = _network_for([attestor], network, now)
    block, out = attestor.revoke(metadata_block_hash, now)
    net.send(attestor.pk, out)
    net.run()
    return block


def key_ownership_challenge(verifier: Peer, owner: Peer, second_key_public: bytes, now: int,
                            skew_ms: int | None = None, network: LocalNetwork | None = None) -> bool:
    net = _network_for([verifier, owner], network, now)
    kwargs = {} if skew_ms is None else {"skew_ms": skew_ms}
    sid, out = verifier.begin_key_challenge(owner.pk, second_key_public, now, **kwargs)
    net.send(verifier.pk, out)
    net.run()
    result = verifier.results.get(sid)
    return bool(result and result.ok and result.detail)


def _with_escalation(policy: VerificationPolicy, escalation: Escalation) -> VerificationPolicy:
    if policy.escalation is escalation:
        return policy
    return VerificationPolicy(policy.trusted_attestors, policy.minimum_attestations, escalation,
                              policy.clock_skew_ms, policy.interactive)
