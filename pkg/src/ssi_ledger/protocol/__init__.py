"""Wire messages, peer state machines and the attestation/verification flows."""

from .messages import (
    Envelope, Escalation, MsgType, decode_frame, encode_frame, frame_session, frame_type, read_frame,
)
from .network import (
    Delivery, LocalNetwork, attestation_flow, key_ownership_challenge, revoke, verify_active,
    verify_intent, verify_passive,
)
from .node import (
    Behavior, OwnedClaim, Peer, SessionResult, answer_key_challenge, check_key_response,
    key_challenge_message,
)
from .policy import DEFAULT_SKEW_MS, REASONS, VerificationOutcome, VerificationPolicy

__all__ = [
    "Behavior", "DEFAULT_SKEW_MS", "Delivery", "Envelope", "Escalation", "LocalNetwork", "MsgType",
    "OwnedClaim", "Peer", "REASONS", "SessionResult", "VerificationOutcome", "VerificationPolicy",
    "answer_key_challenge", "attestation_flow", "check_key_response", "decode_frame",
    "encode_frame", "frame_session", "frame_type", "key_challenge_message",
    "key_ownership_challenge", "read_frame", "revoke", "verify_active", "verify_intent",
    "verify_passive",
]
