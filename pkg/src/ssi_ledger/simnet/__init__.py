"""Deterministic multi-party simulation of the protocol flows."""

from .runner import (
    DEFAULT_START, ROLES, LinkSpec, PeerSpec, ScenarioResult, SimConfig, Simulator, Verification,
    run_scenario,
)
from .scenarios import (
    CONTROL, Scenario, audit_counts, builtin_scenarios, orphan_halves, owner_last_violations,
    times_nondecreasing, unmatched_sends, value_occurrences, verifier_attestor_edges,
)
from .script import Step, parse_script
from .trace import Event, Trace

__all__ = [
    "CONTROL", "DEFAULT_START", "Event", "LinkSpec", "PeerSpec", "ROLES", "Scenario",
    "ScenarioResult", "SimConfig", "Simulator", "Step", "Trace", "Verification", "audit_counts",
    "builtin_scenarios", "orphan_halves", "owner_last_violations", "parse_script", "run_scenario",
    "times_nondecreasing", "unmatched_sends", "value_occurrences", "verifier_attestor_edges",
]
