from .backend import BACKENDS, PersonalBackend, PowBackend
from .blocks import (
    ZERO_HASH, ZERO_KEY, BlockPair, BlockPayload, BlockType, ClaimOrigin, HalfBlock, Intent,
    IntentResponse, PureAttestation, Revocation, Status, block_hash, decode_payload, signed,
)
from .personal import (
    ForkProof, Violation, countersign, create_proposal, create_single, detect_fork, validate_chain,
)
from .pow import (
    MAX_DIFFICULTY, PowBlock, PowChain, detect_pow_fork, leading_zero_bits, mine, pow_append,
    validate_pow_chain,
)
from .store import Appended, FileStore, MemoryStore

__all__ = [
    "Appended", "BACKENDS", "BlockPair", "BlockPayload", "BlockType", "ClaimOrigin", "FileStore",
    "ForkProof", "HalfBlock", "Intent", "IntentResponse", "MAX_DIFFICULTY", "MemoryStore",
    "PersonalBackend", "PowBackend", "PowBlock", "PowChain", "PureAttestation", "Revocation",
    "Status", "Violation", "ZERO_HASH", "ZERO_KEY", "block_hash", "countersign", "create_proposal",
    "create_single", "decode_payload", "detect_fork", "detect_pow_fork", "leading_zero_bits", "mine",
    "pow_append", "signed", "validate_chain", "validate_pow_chain",
]
