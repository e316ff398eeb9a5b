"""Pluggable proof formats: plain disclosure, exact-value and range proofs."""

from .core import (NONCE_BYTES, Commitment, Equals, InRange, Predicate, Proof, ProofBackend,
                   SigmaBackend, Witness, attestor_check, commit, decode_predicate, formats,
                   get_backend, prove, read_predicate, register_backend, verify_proof)
from . import disclose, exact, rangebits  # noqa: F401  (registers the built-in formats)
from .interactive import ProverSession, VerifierSession, interactive_session
from .rangebits import decode_value as decode_range_value
from .rangebits import encode_value as encode_range_value

DISCLOSE = disclose.BACKEND.format_id
EXACT_SIGMA = exact.BACKEND.format_id
RANGE_BITS = rangebits.BACKEND.format_id

__all__ = [
    "NONCE_BYTES", "Commitment", "Equals", "InRange", "Predicate", "Proof", "ProofBackend",
    "SigmaBackend", "Witness", "attestor_check", "commit", "decode_predicate", "formats",
    "get_backend", "prove", "read_predicate", "register_backend", "verify_proof",
    "ProverSession", "VerifierSession", "interactive_session", "encode_range_value",
    "decode_range_value", "DISCLOSE", "EXACT_SIGMA", "RANGE_BITS",
]
