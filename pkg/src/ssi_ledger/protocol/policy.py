"""Verifier trust policy and verification outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field

from .messages import Escalation

DEFAULT_SKEW_MS = 30_000

# Rejection reasons, in the order they are reported.
REASONS = (
    "ProtocolViolation", "Timeout", "UnknownClaim", "OwnerDeclined", "OwnerRefusedIntent",
    "BadSignature", "WrongClaim", "Expired", "UntrustedAttestor", "RevokedAttestation",
    "InsufficientAttestations", "ProofLinkMismatch", "ProofInvalid", "StaleIntent", "BadReceipt",
    "AttestorOffline", "RevokedAtSource", "StaleResponse",
)


@dataclass(frozen=True)
class VerificationPolicy:
    trusted_attestors: frozenset[bytes]
    minimum_attestations: int = 1
    escalation: Escalation = Escalation.PASSIVE
    clock_skew_ms: int = DEFAULT_SKEW_MS
    interactive: bool = False

    def __post_init__(self):
        if self.minimum_attestations < 1:
            raise ValueError("minimum_attestations must be at least 1")
        if self.clock_skew_ms < 0:
            raise ValueError("clock skew tolerance must be non-negative")
        object.__setattr__(self, "trusted_attestors", frozenset(self.trusted_attestors))

    @classmethod
    def parse(cls, text: str) -> "VerificationPolicy":
        """Parse ``trusted=K1+K2,min=1,escalation=passive[,skew=MS][,interactive=1]`` (keys in hex)."""
        fields: dict = {"trusted_attestors": frozenset()}
        for item in filter(None, (p.strip() for p in text.split(","))):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"policy item {item!r} is not key=value")
            if key == "trusted":
                try:
                    keys = [bytes.fromhex(k) for k in val.split("+") if k]
                except ValueError:
                    raise ValueError("trusted keys must be hex") from None
                if any(len(k) != 32 for k in keys):
                    raise ValueError("trusted keys must be 32 bytes")
                fields["trusted_attestors"] = frozenset(keys)
            elif key == "min":
                fields["minimum_attestations"] = int(val)
            elif key == "escalation":
                fields["escalation"] = Escalation.parse(val)
            elif key == "skew":
                fields["clock_skew_ms"] = int(val)
            elif key == "interactive":
                fields["interactive"] = val not in ("0", "false", "no")
            else:
                raise ValueError(f"unknown policy key {key!r}")
        return cls(**fields)


@dataclass(frozen=True)
class VerificationOutcome:
    accepted: bool
    reasons: tuple[str, ...] = field(default=())

    @classmethod
    def from_reasons(cls, reasons) -> "VerificationOutcome":
        found = set(reasons)
        ordered = tuple(r for r in REASONS if r in found) + tuple(sorted(found - set(REASONS)))
        return cls(not ordered, ordered)

    def __str__(self) -> str:
        return "accepted" if self.accepted else "rejected: " + ", ".join(self.reasons)
