"""Self-sovereign identity claims attested on pairwise half-block ledgers.

Subpackages: ``identity`` (Ed25519 keys), ``claims`` (metadata and
commitments), ``proofs`` (predicate proofs over commitments), ``chain``
(half-blocks, stores, proof-of-work backend), ``protocol`` (wire messages
and peer state machines), ``audit`` (fraud proofs), ``simnet``
(deterministic network simulator) and ``cli``.
"""

from .errors import SSIError

__version__ = "0.1.0"

__all__ = ["SSIError", "__version__"]
