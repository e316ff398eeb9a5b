"""Exception hierarchy.

Every operation failure raises a subclass of :class:`SSIError`. The class
name doubles as the error name printed by the command-line tool.
"""


class SSIError(Exception):
    """Base class for all library errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# identity
class InvalidSeed(SSIError):
    pass


class MalformedKey(SSIError):
    pass


class MalformedSignature(MalformedKey):
    """Signature of the wrong length. Subclasses MalformedKey so callers
    catching either get it."""


class InvalidAttributeName(SSIError):
    pass


# claims / proofs
class InvalidClaim(SSIError):
    pass


class UnknownProofFormat(SSIError):
    pass


class InvalidValidityTerm(SSIError):
    pass


class ValueRejectedByBackend(SSIError):
    pass


class InvalidPredicate(SSIError):
    pass


class PredicateFalseForWitness(SSIError):
    pass


class UnsupportedPredicate(SSIError):
    pass


class MalformedTranscript(SSIError):
    pass


class OutOfOrderMessage(SSIError):
    pass


class SessionAlreadyFinished(SSIError):
    pass


# encoding
class DecodeError(SSIError):
    """Bytes do not parse as the expected canonical structure."""


# chain
class StaleTail(SSIError):
    pass


class BadProposalSignature(SSIError):
    pass


class LinkMismatch(SSIError):
    pass


class PayloadRejected(SSIError):
    pass


class DuplicateSequence(SSIError):
    pass


class StorageCorruption(SSIError):
    pass


# protocol
class ProtocolViolation(SSIError):
    pass


class AttestorRejected(SSIError):
    pass


class OwnerDeclined(SSIError):
    pass


class OwnerRefusedIntent(SSIError):
    pass


class Timeout(SSIError):
    pass


class NotTheAttestor(SSIError):
    pass


class UnknownClaim(SSIError):
    pass


# audit
class EmptyChain(SSIError):
    pass


class InvalidEvidence(SSIError):
    pass


# simulator / cli
class ScriptError(SSIError):
    pass


class UnknownBackend(SSIError):
    pass


class NoIdentity(SSIError):
    pass


class IdentityExists(SSIError):
    pass


class VerificationRejected(SSIError):
    pass


class ScenarioFailed(SSIError):
    pass


class TransportError(SSIError):
    pass
