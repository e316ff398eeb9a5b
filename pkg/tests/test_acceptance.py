"""The twelve acceptance criteria, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
"acceptance criteria" summary section) or ``python tests/test_acceptance.py``.
"""

import random
import sys
from dataclasses import replace

import pytest

from conftest import ACCEPTANCE_LINES, INCOME, NOW, Party, make_key
from proof_cases import FORMATS, accepts, flip_bit, forged_transcript, honest_instance
from ssi_ledger import proofs
from ssi_ledger.audit import WithheldRevocation, audit_global, verify_fraud_proof
from ssi_ledger.bench import run_bench
from ssi_ledger.chain import (
    BlockType, ForkProof, HalfBlock, Intent, PureAttestation, create_proposal, signed,
    validate_chain,
)
from ssi_ledger.proofs import InRange, Proof
from ssi_ledger.protocol import attestation_flow, verify_passive
from ssi_ledger.simnet import (
    CONTROL, LinkSpec, SimConfig, audit_counts, builtin_scenarios, owner_last_violations,
    run_scenario, value_occurrences, verifier_attestor_edges,
)

from test_chain import _random_block

SCENARIOS = builtin_scenarios()
NONCE = bytes(range(32))
MS = 1_000_000  # nanoseconds per millisecond


def report(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def bench():
    return run_bench(iterations=100, value_bytes=20, seed=0)


@pytest.fixture(scope="module")
def honest_proofs():
    """1000 honest (commitment, predicate, proof) triples per format, range widths up to 2**16."""
    rng = random.Random(2024)
    out = {}
    for fmt in FORMATS:
        runs = []
        for _ in range(1000):
            c, w, pred = honest_instance(fmt, rng, max_width_bits=16)
            runs.append((c, pred, proofs.prove(fmt, w, c, pred, NONCE, rng)))
        out[fmt] = runs
    return out


# 1 -------------------------------------------------------------------------
def test_criterion_1_timing(bench):
    parts, ok = [], True
    for fmt in bench.backends():
        for op in ("attest", "verify"):
            median = bench.summary(fmt, op).median
            ok &= median < 100 * MS
            parts.append(f"{fmt} {op} {median / MS:.3f}ms")
    hard = all(bench.summary(f, op).median < 1000 * MS for f in bench.backends()
               for op in ("attest", "verify"))
    report(1, ok and hard, "medians over 100 x 20-byte values (limit 100ms): " + ", ".join(parts))


# 2 -------------------------------------------------------------------------
def test_criterion_2_verify_not_slower_than_attest(bench):
    parts, ok = [], True
    for fmt in bench.backends():
        attest = bench.summary(fmt, "attest").median
        verify = bench.summary(fmt, "verify").median
        holds = verify <= attest
        if fmt != proofs.DISCLOSE:
            ok &= holds
        tag = "" if fmt != proofs.DISCLOSE else " (report only)"
        parts.append(f"{fmt} verify {verify / MS:.3f}ms vs attest {attest / MS:.3f}ms "
                     f"{'ok' if holds else 'VIOLATED'}{tag}")
    report(2, ok, "; ".join(parts))


# 3 -------------------------------------------------------------------------
def test_criterion_3_completeness(honest_proofs):
    counts = {fmt: sum(proofs.verify_proof(fmt, c, pred, proof, NONCE) for c, pred, proof in runs)
              for fmt, runs in honest_proofs.items()}
    report(3, all(n == 1000 for n in counts.values()),
           ", ".join(f"{fmt} {n}/1000 accepted" for fmt, n in counts.items()))


# 4 -------------------------------------------------------------------------
def test_criterion_4_soundness(honest_proofs):
    rng = random.Random(4)
    parts, ok = [], True
    for fmt, runs in honest_proofs.items():
        forged = mutated = 0
        for c, pred, proof in runs:
            fake = Proof(fmt, forged_transcript(fmt, pred, rng), NONCE)
            forged += accepts(fmt, c, pred, fake, NONCE)
            flipped = Proof(fmt, flip_bit(proof.transcript, rng), NONCE)
            mutated += accepts(fmt, c, pred, flipped, NONCE)
        ok &= forged == 0 and mutated == 0
        parts.append(f"{fmt} forgeries {forged}/1000, mutations {mutated}/1000")
    report(4, ok, ", ".join(parts))


# 5 -------------------------------------------------------------------------
def test_criterion_5_nonce_binding(honest_proofs):
    rng = random.Random(5)
    parts, ok = [], True
    for fmt, runs in honest_proofs.items():
        bad = 0
        for c, pred, proof in runs:
            other = flip_bit(NONCE, rng) if rng.random() < 0.5 else rng.randbytes(32)
            bad += accepts(fmt, c, pred, proof, other)
            bad += accepts(fmt, c, pred, Proof(fmt, proof.transcript, other), other) \
                if fmt != proofs.DISCLOSE else 0
        ok &= bad == 0
        parts.append(f"{fmt} {bad}/1000 accepted")
    report(5, ok, ", ".join(parts))


# 6 -------------------------------------------------------------------------
def _range_accepts(v, low, high, rng) -> bool:
    backend = proofs.get_backend(proofs.RANGE_BITS)
    c, w = proofs.commit(proofs.RANGE_BITS, proofs.encode_range_value(v), rng)
    pred = InRange(low, high)
    transcript = backend.prove(c.data, w, pred, NONCE, rng)
    return accepts(proofs.RANGE_BITS, c.data, pred, Proof(proofs.RANGE_BITS, transcript, NONCE), NONCE)


def test_criterion_6_range_brute_force():
    rng = random.Random(6)
    small = sum(_range_accepts(v, 8, 23, rng) == (8 <= v <= 23) for v in range(32))
    large = sum(_range_accepts(v, 17, 203, rng) == (17 <= v <= 203) for v in range(256))
    report(6, small == 32 and large == 256,
           f"InRange(8,23) {small}/32 correct, InRange(17,203) {large}/256 correct")


# 7 -------------------------------------------------------------------------
def _mutation_matrix() -> tuple[int, int]:
    key, other = make_key("matrix"), make_key("matrix-peer").public_key
    chain, tail = [], None
    for i in range(6):
        tail = create_proposal(key, other, PureAttestation(bytes([i]) * 32), tail, NOW + i)
        chain.append(tail)
    planted = flagged = 0

    def check(blocks, seq, needle):
        nonlocal planted, flagged
        planted += 1
        flagged += any(v.sequence_number == seq and needle in v.message for v in validate_chain(blocks))

    for i in range(1, 5):
        check(chain[:i] + chain[i + 1:], i + 1, "gap")
    for i in range(1, 6):
        bad = signed(replace(chain[i], previous_hash=bytes([0xEE]) * 32), key)
        check(chain[:i] + [bad] + chain[i + 1:], i + 1, "previous hash")
    for i in range(6):
        sig = bytearray(chain[i].signature)
        sig[i] ^= 0x10
        check(chain[:i] + [replace(chain[i], signature=bytes(sig))] + chain[i + 1:], i + 1,
              "bad signature")
    for i in range(6):
        mistyped = signed(replace(chain[i], block_type=int(BlockType.INTENT)), key)
        check(chain[:i] + [mistyped] + chain[i + 1:], i + 1, "malformed payload")
        short_nonce = signed(replace(chain[i], block_type=int(BlockType.INTENT),
                                     payload=Intent(bytes(32), bytes(31), NOW)), key)
        check(chain[:i] + [short_nonce] + chain[i + 1:], i + 1, "malformed payload")
    return planted, flagged


def test_criterion_7_chain_integrity():
    rng = random.Random(7)
    lossless = 0
    for _ in range(10_000):
        b = _random_block(rng)
        lossless += HalfBlock.decode(b.encode()) == b
    planted, flagged = _mutation_matrix()
    report(7, lossless == 10_000 and flagged == planted,
           f"{lossless}/10000 round trips lossless, {flagged}/{planted} planted violations flagged")


# 8 -------------------------------------------------------------------------
def test_criterion_8_fraud_detection():
    withheld = audit_global(SCENARIOS["withheld-revocation"].run().snapshot)
    w = [p for p in withheld if isinstance(p, WithheldRevocation)]
    w_ok = len(w) == 1 and len(withheld) == 1 and verify_fraud_proof(w[0])
    control = audit_global(SCENARIOS[CONTROL].run().snapshot)
    fork = audit_global(SCENARIOS["fork-whitewash"].run().snapshot)
    f_ok = len(fork) == 1 and isinstance(fork[0], ForkProof) and verify_fraud_proof(fork[0])
    report(8, w_ok and control == [] and f_ok,
           f"withheld scenario {len(w)} proof(s) (verified {w_ok}), control {len(control)}, "
           f"fork-whitewash {len(fork)} fork proof(s)")


# 9 -------------------------------------------------------------------------
def _signature(result):
    return ([str(v.outcome) if v.outcome else v.error for v in result.verifications],
            audit_counts(result), result.failures)


def test_criterion_9_chain_agnostic():
    same, passed = 0, 0
    for name, sc in SCENARIOS.items():
        personal = sc.run(backend="personal")
        pow_run = sc.run(backend="pow", pow_difficulty=8)
        passed += personal.passed and pow_run.passed
        same += _signature(personal) == _signature(pow_run)
    n = len(SCENARIOS)
    report(9, same == n and passed == n,
           f"{passed}/{n} scenarios pass on both backends, {same}/{n} identical outcomes (pow difficulty 8)")


# 10 ------------------------------------------------------------------------
def test_criterion_10_trace_invariants():
    checked = violations = edges = occurrences = 0
    active_runs = 0
    for name, sc in SCENARIOS.items():
        result = sc.run()
        owners = [result.peers[p.name].pk for p in result.config.peers if p.role == "owner"]
        checked += sum(1 for b in result.snapshot.blocks if b.public_key in owners)
        violations += len(owner_last_violations(result))
        if result.active_sessions:
            active_runs += 1
            edges += verifier_attestor_edges(result)
        for value in (INCOME, 1_000_001):
            occurrences += value_occurrences(result, value, "verifier")
    report(10, violations == 0 and edges == 0 and occurrences == 0 and checked > 0,
           f"owner-last {checked - violations}/{checked} owner-chain blocks, "
           f"{edges} verifier-attestor edges over {active_runs} active scenarios, "
           f"{occurrences} committed range values in verifier traffic")


# 11 ------------------------------------------------------------------------
def test_criterion_11_determinism():
    runs = identical = 0
    for name, sc in SCENARIOS.items():
        for seed in (1, 99):
            runs += 1
            identical += sc.run(seed=seed).trace.structured() == sc.run(seed=seed).trace.structured()
    script = SCENARIOS["honest-active"].script
    for seed in range(5):
        config = SimConfig.standard(seed, default_link=LinkSpec((1, 80), 0.15))
        runs += 1
        identical += (run_scenario(config, script).trace.structured()
                      == run_scenario(config, script).trace.structured())
    report(11, identical == runs, f"{identical}/{runs} replays byte-identical")


# 12 ------------------------------------------------------------------------
def test_criterion_12_expiry():
    term = NOW + 60_000
    party = Party()
    attestation_flow(party.owner, party.attestor, "income", proofs.encode_range_value(INCOME),
                     proofs.RANGE_BITS, term, NOW, party.net)
    pred = InRange(1_000_000, 2_000_000)
    at_t = verify_passive(party.verifier, party.owner, party.policy(), "income", pred, term, party.net)
    after = verify_passive(party.verifier, party.owner, party.policy(), "income", pred, term + 1,
                           party.net)
    report(12, at_t.accepted and not after.accepted and after.reasons == ("Expired",),
           f"at T: {at_t}; at T+1: {after}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
