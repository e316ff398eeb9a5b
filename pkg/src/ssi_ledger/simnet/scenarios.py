"""Built-in scenarios and the trace invariants checked over them."""

from __future__ import annotations

from dataclasses import dataclass

from ..audit import audit_global
from ..chain import BlockPair
from ..proofs import encode_range_value
from .runner import ScenarioResult, SimConfig, run_scenario

INCOME = 1_337_420
RANGE = "range:1000000:2000000"

_ATTEST = f"attest owner attestor income {INCOME} range-bits.v1 0\nadvance 100\n"


@dataclass(frozen=True)
class Scenario:
    name: str
    script: str
    honest: bool = True
    extra_peers: tuple[tuple[str, str], ...] = ()

    def config(self, seed: int = 7, backend: str = "personal", **kwargs) -> SimConfig:
        peers = (("owner", "owner"), ("attestor", "attestor"), ("verifier", "verifier"),
                 ("auditor", "auditor")) + self.extra_peers
        return SimConfig.standard(seed, peers, backend=backend, **kwargs)

    def run(self, seed: int = 7, backend: str = "personal", **kwargs) -> ScenarioResult:
        return run_scenario(self.config(seed, backend, **kwargs), self.script)


_SCENARIOS = [
    Scenario("honest-passive", _ATTEST + f"""
verify verifier owner passive income {RANGE}
expect accepted
expect-audit withheld=0 fork=0
"""),
    Scenario("honest-intent", _ATTEST + f"""
verify verifier owner intent income {RANGE}
expect accepted
expect-audit withheld=0 fork=0
"""),
    Scenario("honest-active", _ATTEST + f"""
verify verifier owner active income {RANGE}
expect accepted
expect-audit withheld=0 fork=0
"""),
    Scenario("honest-interactive", _ATTEST + f"""
verify verifier owner intent income {RANGE} interactive
expect accepted
expect-audit withheld=0 fork=0
"""),
    Scenario("two-attestors", _ATTEST + f"""
attest owner attestor2 income {INCOME} range-bits.v1 0
advance 100
verify verifier owner active income {RANGE} trusted=attestor+attestor2 min=2
expect accepted
expect-audit withheld=0 fork=0
""", extra_peers=(("attestor2", "attestor"),)),
    Scenario("withheld-revocation", _ATTEST + f"""
drop attestor verifier 1
revoke attestor owner/income
advance 500
verify verifier owner intent income {RANGE}
expect accepted
expect-audit withheld=1 fork=0
""", honest=False),
    Scenario("revoked-after-presentation", _ATTEST + f"""
verify verifier owner intent income {RANGE}
expect accepted
advance 500
revoke attestor owner/income
expect-audit withheld=0 fork=0
"""),
    Scenario("fork-whitewash", _ATTEST + f"""
whitewash owner 1
attest owner attestor income 1000001 range-bits.v1 0
advance 100
verify verifier owner passive income {RANGE}
expect accepted
expect-audit withheld=0 fork=1
""", honest=False),
    Scenario("expired-claim", f"""
attest owner attestor income {INCOME} range-bits.v1 +1000
advance 5000
verify verifier owner passive income {RANGE}
expect rejected Expired
expect-audit withheld=0 fork=0
"""),
    Scenario("untrusted-attestor", _ATTEST + f"""
verify verifier owner passive income {RANGE} trusted=stranger
expect rejected UntrustedAttestor
expect-audit withheld=0 fork=0
""", extra_peers=(("stranger", "attestor"),)),
    Scenario("replayed-proof", _ATTEST + f"""
verify verifier owner passive income {RANGE}
expect accepted
behave owner replay_proof on
verify verifier owner passive income {RANGE}
expect rejected ProofInvalid
expect-audit withheld=0 fork=0
""", honest=False),
    Scenario("replayed-intent", _ATTEST + f"""
verify verifier owner intent income {RANGE}
expect accepted
behave owner replay_intent on
verify verifier owner intent income {RANGE}
expect rejected StaleIntent
""", honest=False),
    Scenario("offline-attestor-active", _ATTEST + f"""
offline attestor
verify verifier owner active income {RANGE}
expect rejected AttestorOffline
expect-audit withheld=0 fork=0
"""),
    Scenario("revoked-at-source", _ATTEST + f"""
drop attestor verifier 1
revoke attestor owner/income
advance 100
verify verifier owner active income {RANGE}
expect rejected RevokedAtSource
""", honest=False),
    Scenario("declined-intent", _ATTEST + f"""
behave owner decline_intent on
verify verifier owner intent income {RANGE}
expect rejected OwnerRefusedIntent
expect-audit withheld=0 fork=0
""", honest=False),
    Scenario("exact-value", """
attest owner attestor nationality NL exact-sigma.v1 0
advance 100
verify verifier owner intent nationality eq:NL
expect accepted
verify verifier owner passive nationality eq:DE
expect rejected
expect-audit withheld=0 fork=0
"""),
    Scenario("disclosure", """
attest owner attestor email alice@example.org disclose.v1 0
advance 100
verify verifier owner passive email eq:alice@example.org
expect accepted
expect-audit withheld=0 fork=0
"""),
]

# the control for withheld-revocation: revocation at or after the presentation
CONTROL = "revoked-after-presentation"


def builtin_scenarios() -> dict[str, Scenario]:
    return {s.name: s for s in _SCENARIOS}


# -- invariants --------------------------------------------------------------

def owner_last_violations(result: ScenarioResult) -> list[str]:
    """Blocks on owner chains that are not countersignatures of a stored proposal."""
    blocks = {b.hash: b for b in result.snapshot.blocks}
    by_slot = {(b.public_key, b.sequence_number): b for b in blocks.values()}
    out = []
    for name, peer in result.peers.items():
        if result.config.peers[[p.name for p in result.config.peers].index(name)].role != "owner":
            continue
        for b in (b for b in blocks.values() if b.public_key == peer.pk):
            proposal = by_slot.get((b.link_public_key, b.link_sequence_number))
            if not b.is_agreement or proposal is None or BlockPair(proposal, b).problems():
                out.append(f"{name} seq {b.sequence_number}: not an owner countersignature")
    return out


def verifier_attestor_edges(result: ScenarioResult) -> int:
    """Messages within active verification sessions that connect a verifier and an attestor."""
    roles = {p.name: p.role for p in result.config.peers}
    sessions = {sid.hex() for sid in result.active_sessions}
    n = 0
    for e in result.trace.of_kind("send"):
        if e.get("session") not in sessions:
            continue
        pair = {roles.get(e.get("src")), roles.get(e.get("dst"))}
        if pair == {"verifier", "attestor"}:
            n += 1
    return n


def value_occurrences(result: ScenarioResult, value: int, party: str = "verifier") -> int:
    """How often the 8-byte encoding of ``value`` appears in frames sent to or from ``party``."""
    needle = encode_range_value(value).hex()
    n = 0
    for e in result.trace.of_kind("send"):
        if party in (e.get("src"), e.get("dst")):
            frame = e.get("frame")
            n += sum(1 for i in range(0, len(frame) - len(needle) + 1, 2)
                     if frame.startswith(needle, i))
    return n


def orphan_halves(result: ScenarioResult) -> list[str]:
    """Proposal halves with no agreement anywhere in the snapshot."""
    blocks = result.snapshot.blocks
    linked = {(b.link_public_key, b.link_sequence_number) for b in blocks if b.is_agreement}
    return [f"{b.public_key.hex()[:8]} seq {b.sequence_number}" for b in blocks
            if b.is_proposal and (b.public_key, b.sequence_number) not in linked]


def unmatched_sends(result: ScenarioResult) -> int:
    sends = {(e.get("src"), e.get("dst"), e.get("seq")) for e in result.trace.of_kind("send")}
    ends = {(e.get("src"), e.get("dst"), e.get("seq"))
            for e in result.trace.of_kind("deliver", "drop", "unreachable")}
    return len(sends ^ ends)


def times_nondecreasing(result: ScenarioResult) -> bool:
    times = [e.time for e in result.trace.events]
    return all(a <= b for a, b in zip(times, times[1:]))


def audit_counts(result: ScenarioResult) -> dict[str, int]:
    proofs = audit_global(result.snapshot)
    return {"withheld": sum(type(p).__name__ == "WithheldRevocation" for p in proofs),
            "fork": sum(type(p).__name__ == "ForkProof" for p in proofs)}

