import pytest
from hypothesis import given, settings, strategies as st

from ssi_ledger.errors import ScriptError, UnknownBackend
from ssi_ledger.simnet import (
    CONTROL, LinkSpec, SimConfig, Trace, audit_counts, builtin_scenarios, orphan_halves,
    owner_last_violations, parse_script, run_scenario, times_nondecreasing, unmatched_sends,
    value_occurrences, verifier_attestor_edges,
)

from conftest import INCOME

SCENARIOS = builtin_scenarios()
ATTEST_AND_VERIFY = f"""
attest owner attestor income {INCOME} range-bits.v1 0
advance 100
verify verifier owner passive income range:1000000:2000000
"""


@pytest.mark.parametrize("name", sorted(SCENARIOS))
@pytest.mark.parametrize("backend", ["personal", "pow"])
def test_builtin_scenario_passes(name, backend):
    result = SCENARIOS[name].run(seed=7, backend=backend, pow_difficulty=4)
    assert result.passed, result.failures
    assert owner_last_violations(result) == []
    assert unmatched_sends(result) == 0
    assert times_nondecreasing(result)


@pytest.mark.parametrize("name", sorted(n for n, s in SCENARIOS.items() if s.honest))
def test_honest_scenarios_leave_no_orphans(name):
    result = SCENARIOS[name].run()
    assert orphan_halves(result) == []
    assert audit_counts(result) == {"withheld": 0, "fork": 0}


@pytest.mark.parametrize("name", ["honest-passive", "withheld-revocation", "fork-whitewash"])
def test_same_seed_same_trace(name):
    a = SCENARIOS[name].run(seed=11).trace.structured()
    b = SCENARIOS[name].run(seed=11).trace.structured()
    assert a == b
    assert Trace.parse_structured(a).structured() == a


def test_different_seeds_differ():
    a = SCENARIOS["honest-passive"].run(seed=1).trace.structured()
    b = SCENARIOS["honest-passive"].run(seed=2).trace.structured()
    assert a != b


def test_withheld_revocation_and_control():
    assert audit_counts(SCENARIOS["withheld-revocation"].run()) == {"withheld": 1, "fork": 0}
    assert audit_counts(SCENARIOS[CONTROL].run()) == {"withheld": 0, "fork": 0}


def test_passive_and_intent_never_contact_attestor():
    for name in ("honest-passive", "honest-intent", "withheld-revocation"):
        result = SCENARIOS[name].run()
        direct = [e for e in result.trace.of_kind("send")
                  if {e.get("src"), e.get("dst")} == {"verifier", "attestor"}
                  and e.get("type") != "REVOCATION_ANNOUNCE"]
        assert direct == []
    assert verifier_attestor_edges(SCENARIOS["honest-active"].run()) == 0


def test_range_proof_hides_the_value():
    result = SCENARIOS["honest-passive"].run()
    assert value_occurrences(result, INCOME, "verifier") == 0
    assert value_occurrences(result, INCOME, "attestor") >= 1


def test_lossy_links_are_deterministic():
    lossy = LinkSpec(latency_ms=(5, 50), drop_probability=0.2)
    config = SimConfig.standard(3, default_link=lossy)
    a = run_scenario(config, ATTEST_AND_VERIFY)
    b = run_scenario(config, ATTEST_AND_VERIFY)
    assert a.trace.structured() == b.trace.structured()
    assert times_nondecreasing(a) and unmatched_sends(a) == 0


@settings(max_examples=20)
@given(st.integers(0, 2**32), st.floats(0, 0.5), st.integers(0, 30), st.integers(0, 30))
def test_invariants_under_random_networks(seed, drop, lo, spread):
    config = SimConfig.standard(seed, default_link=LinkSpec((lo, lo + spread), drop))
    result = run_scenario(config, ATTEST_AND_VERIFY)
    assert owner_last_violations(result) == []
    assert unmatched_sends(result) == 0
    assert times_nondecreasing(result)
    assert audit_counts(result) == {"withheld": 0, "fork": 0}
    [v] = result.verifications
    if v.outcome is not None and v.outcome.accepted:
        assert v.error is None


def test_scripted_drops():
    lost_request = ATTEST_AND_VERIFY.replace("verify", "drop verifier owner 1\nverify")
    result = run_scenario(SimConfig.standard(1), lost_request + "expect rejected Timeout\n")
    assert result.passed, result.failures
    # losing the presentation makes the proof arrive out of order
    lost_presentation = ATTEST_AND_VERIFY.replace("verify", "drop owner verifier 1\nverify")
    result = run_scenario(SimConfig.standard(1), lost_presentation + "expect rejected ProtocolViolation\n")
    assert result.passed, result.failures


def test_failed_expectation_reported():
    result = run_scenario(SimConfig.standard(1), ATTEST_AND_VERIFY + "expect rejected Expired\n")
    assert not result.passed
    assert "expected rejected Expired" in result.failures[0]


@pytest.mark.parametrize("script,message", [
    ("fly owner", "unknown verb"),
    ("advance", "takes 1..1 arguments"),
    ('verify "unterminated', "line 1"),
])
def test_script_parse_errors(script, message):
    with pytest.raises(ScriptError, match=message):
        parse_script(script)


def test_script_runtime_errors():
    with pytest.raises(ScriptError, match="undeclared peer"):
        run_scenario(SimConfig.standard(1), "offline ghost")
    with pytest.raises(ScriptError):
        run_scenario(SimConfig.standard(1), "attest owner attestor income notanumber range-bits.v1 0")
    with pytest.raises(UnknownBackend):
        run_scenario(SimConfig.standard(1, backend="tangle"), "advance 1")


def test_comments_and_blank_lines():
    steps = parse_script("# header\n\nadvance 5  # trailing\n")
    assert [(s.line, s.verb, s.args) for s in steps] == [(3, "advance", ("5",))]


def test_pow_backend_mines_published_blocks():
    result = SCENARIOS["honest-intent"].run(backend="pow", pow_difficulty=4)
    assert result.global_chain is not None and result.global_chain.blocks
    mined = {e.hash for e in result.global_chain.entries()}
    owner = result.peers["owner"]
    assert {b.hash for b in owner.backend.store.chain(owner.pk)} <= mined
