import hashlib
import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from ssi_ledger.identity import generate_identity
from ssi_ledger.protocol import LocalNetwork, Peer, VerificationPolicy

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

NOW = 1_700_000_000_000
INCOME = 1_337_420


def make_key(label: str):
    return generate_identity(hashlib.sha256(b"test-key/" + label.encode()).digest())


def make_peer(label: str, seed: int | None = None) -> Peer:
    rng = random.Random(seed if seed is not None else label)
    return Peer(make_key(label), rng=rng, name=label)


class Party:
    """Owner, two attestors and a verifier on one zero-latency network."""

    def __init__(self):
        self.owner = make_peer("owner")
        self.attestor = make_peer("attestor")
        self.attestor2 = make_peer("attestor2")
        self.verifier = make_peer("verifier")
        self.net = LocalNetwork([self.owner, self.attestor, self.attestor2, self.verifier], NOW)

    def policy(self, *attestors, minimum=1, **kw) -> VerificationPolicy:
        keys = [a.pk for a in attestors] or [self.attestor.pk]
        return VerificationPolicy(frozenset(keys), minimum, **kw)


@pytest.fixture
def party():
    return Party()


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
