"""Attest/verify timing harness.

For every iteration a fresh random value is drawn (the same value sequence
for every proof format, fixed by the seed). Per format:

attest
    the full attestation exchange: commitment and claim creation, the
    attestor's check and proposal, the owner's countersignature, with frame
    encoding/decoding and store appends on both sides.
verify
    the verifier's processing of the owner's presentation and proof for a
    single-value predicate: pair signatures, trust count, validity term,
    proof link and proof verification. The owner's proving runs untimed
    because it is prover work.

range-bits.v1 takes the first 8 bytes of the value as a big-endian integer.
Timestamps come from ``time.perf_counter_ns``; the garbage collector is
paused around the run.
"""

from __future__ import annotations

import csv
import gc
import io
import random
import statistics
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import proofs
from .chain import FileStore, PersonalBackend
from .errors import SSIError, UnknownBackend
from .identity import generate_identity
from .protocol import LocalNetwork, Peer, VerificationPolicy, attestation_flow

OPS = ("attest", "verify")
CSV_HEADER = ("backend", "op", "iteration", "nanoseconds")


@dataclass(frozen=True)
class Summary:
    count: int
    minimum: int
    q1: float
    median: float
    q3: float
    maximum: int


def summarize(samples: Iterable[int]) -> Summary:
    data = sorted(samples)
    if len(data) == 1:
        v = data[0]
        return Summary(1, v, v, v, v, v)
    q1, q2, q3 = statistics.quantiles(data, n=4, method="inclusive")
    return Summary(len(data), data[0], q1, statistics.median(data), q3, data[-1])


@dataclass
class BenchReport:
    iterations: int
    value_bytes: int
    seed: int
    samples: dict[tuple[str, str], list[int]] = field(default_factory=dict)

    def backends(self) -> list[str]:
        return sorted({b for b, _ in self.samples})

    def summary(self, backend: str, op: str) -> Summary:
        return summarize(self.samples[(backend, op)])

    def rows(self) -> list[tuple[str, str, int, int]]:
        return [(b, op, i, ns) for b in self.backends() for op in OPS
                for i, ns in enumerate(self.samples.get((b, op), []))]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.rows())
        return buf.getvalue()

    def text(self) -> str:
        lines = [f"iterations={self.iterations} value_bytes={self.value_bytes} seed={self.seed}",
                 f"{'backend':16} {'op':7} {'n':>4} {'min_ms':>9} {'q1_ms':>9} {'median_ms':>9} "
                 f"{'q3_ms':>9} {'max_ms':>9}"]
        for b in self.backends():
            for op in OPS:
                if (b, op) not in self.samples:
                    continue
                s = self.summary(b, op)
                lines.append(f"{b:16} {op:7} {s.count:>4} " + " ".join(
                    f"{v / 1e6:>9.3f}" for v in (s.minimum, s.q1, s.median, s.q3, s.maximum)))
        return "\n".join(lines) + "\n"

    def structured(self) -> str:
        lines = []
        for b in self.backends():
            for op in OPS:
                if (b, op) not in self.samples:
                    continue
                s = self.summary(b, op)
                lines += [f"backend {b}", f"op {op}", f"count {s.count}", f"min_ns {s.minimum}",
                          f"q1_ns {s.q1}", f"median_ns {s.median}", f"q3_ns {s.q3}",
                          f"max_ns {s.maximum}", "end"]
        return "\n".join(lines) + "\n"


def samples_from_csv(text: str) -> dict[tuple[str, str], list[int]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a bench CSV")
    out: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for b, op, i, ns in rows[1:]:
        out.setdefault((b, op), []).append((int(i), int(ns)))
    return {k: [ns for _, ns in sorted(v)] for k, v in out.items()}


def bench_values(seed: int, iterations: int, value_bytes: int) -> list[bytes]:
    rng = random.Random(seed)
    return [rng.randbytes(value_bytes) for _ in range(iterations)]


def _format_value(fmt: str, value: bytes) -> bytes:
    if fmt == proofs.RANGE_BITS:
        return value[:8].rjust(8, b"\x00")
    return value


class _Rig:
    """One owner, attestor and verifier wired on a zero-latency network."""

    def __init__(self, seed: int, store_dir: Optional[str]):
        def backend(tag: str):
            if store_dir is None:
                return PersonalBackend()
            return PersonalBackend(FileStore(f"{store_dir}/{tag}"))

        rng = random.Random(seed)
        self.owner = Peer(generate_identity(rng.randbytes(32)), backend("owner"),
                          rng=random.Random(rng.getrandbits(64)), name="owner")
        self.attestor = Peer(generate_identity(rng.randbytes(32)), backend("attestor"),
                             rng=random.Random(rng.getrandbits(64)), name="attestor")
        self.verifier = Peer(generate_identity(rng.randbytes(32)), backend("verifier"),
                             rng=random.Random(rng.getrandbits(64)), name="verifier")
        self.net = LocalNetwork([self.owner, self.attestor, self.verifier])
        self.policy = VerificationPolicy(frozenset({self.attestor.pk}), 1)

    def attest(self, name: str, fmt: str, value: bytes, now: int) -> int:
        t0 = time.perf_counter_ns()
        attestation_flow(self.owner, self.attestor, name, value, fmt, 0, now, self.net)
        return time.perf_counter_ns() - t0

    def verify(self, name: str, value: bytes, now: int) -> int:
        v, o = self.verifier, self.owner
        sid, out = v.begin_verification(o.pk, name, proofs.Equals(value), self.policy, now)
        replies = []
        for _, frame in out:
            replies += o.handle(v.pk, frame, now)
        t0 = time.perf_counter_ns()
        for _, frame in replies:
            v.handle(o.pk, frame, now)
        elapsed = time.perf_counter_ns() - t0
        result = v.results.get(sid)
        if result is None or result.outcome is None or not result.outcome.accepted:
            raise SSIError(f"bench verification of {name} was not accepted: {result}")
        return elapsed


def run_bench(backends: Iterable[str] | None = None, iterations: int = 100, value_bytes: int = 20,
              seed: int = 0, persist: bool = False) -> BenchReport:
    known = proofs.formats()
    selected = list(backends) if backends else known
    for b in selected:
        if b not in known:
            raise UnknownBackend(b)
    if iterations < 1 or value_bytes < 1:
        raise ValueError("iterations and value_bytes must be positive")
    values = bench_values(seed, iterations, value_bytes)
    report = BenchReport(iterations, value_bytes, seed,
                         {(b, op): [] for b in selected for op in OPS})
    tmp = tempfile.TemporaryDirectory() if persist else None
    rigs = {b: _Rig(seed, f"{tmp.name}/{b}" if tmp else None) for b in selected}
    was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        now = 1_700_000_000_000
        for i, raw in enumerate(values):
            for b in selected:
                value = _format_value(b, raw)
                name = f"attr-{i}"
                report.samples[(b, "attest")].append(rigs[b].attest(name, b, value, now))
                report.samples[(b, "verify")].append(rigs[b].verify(name, value, now))
            now += 1
    finally:
        if was_enabled:
            gc.enable()
        if tmp is not None:
            tmp.cleanup()
    return report
