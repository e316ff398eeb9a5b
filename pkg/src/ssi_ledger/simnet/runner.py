"""Deterministic discrete-event simulator for protocol peers.

Peers exchange real wire frames over in-process edges. Delivery order is
(delivery time, receiver index, sender index, per-edge sequence number);
each edge is FIFO. All randomness (latency, drops, nonces, blindings, PoW
nonce search) comes from streams derived from the configured seed, so the
same config and script always give the same trace.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from ..audit import Snapshot, audit_global
from ..audit import WithheldRevocation
from ..chain import ForkProof, PersonalBackend, PowBackend, PowChain
from ..chain.blocks import BlockType
from ..encoding import u64
from ..errors import ScriptError, SSIError, UnknownBackend
from ..identity import generate_identity
from ..proofs import RANGE_BITS, Equals, InRange, encode_range_value
from ..protocol import Behavior, Escalation, Peer, VerificationOutcome, VerificationPolicy
from ..protocol.messages import frame_session, frame_type
from .script import Step, parse_script
from .trace import Trace

ROLES = ("owner", "attestor", "verifier", "auditor")
DEFAULT_START = 1_700_000_000_000


def _derive(seed: int, *parts: bytes) -> bytes:
    return hashlib.sha256(b"ssi-ledger/sim" + u64(seed) + b"".join(parts)).digest()


@dataclass(frozen=True)
class LinkSpec:
    latency_ms: Union[int, tuple[int, int]] = 10
    drop_probability: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop probability must be in [0, 1]")
        lat = self.latency_ms
        if isinstance(lat, tuple):
            if not 0 <= lat[0] <= lat[1]:
                raise ValueError("latency range must satisfy 0 <= lo <= hi")
        elif lat < 0:
            raise ValueError("latency must be non-negative")


@dataclass(frozen=True)
class PeerSpec:
    name: str
    role: str
    identity_seed: bytes

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class SimConfig:
    seed: int
    peers: tuple[PeerSpec, ...]
    links: tuple[tuple[str, str, LinkSpec], ...] = ()
    default_link: LinkSpec = LinkSpec()
    start_time: int = DEFAULT_START
    backend: str = "personal"
    pow_difficulty: int = 8

    @classmethod
    def standard(cls, seed: int, peers=(("owner", "owner"), ("attestor", "attestor"),
                                          ("verifier", "verifier"), ("auditor", "auditor")),
                 **kwargs) -> "SimConfig":
        """Peers given as (name, role); identity seeds derive from the sim seed and name."""
        specs = tuple(PeerSpec(n, r, _derive(seed, b"identity", n.encode())) for n, r in peers)
        return cls(seed, specs, **kwargs)

    def link(self, src: str, dst: str) -> LinkSpec:
        for a, b, spec in self.links:
            if a == src and b == dst:
                return spec
        return self.default_link


@dataclass
class Verification:
    step: Step
    verifier: str
    session_id: bytes
    outcome: Optional[VerificationOutcome]
    error: Optional[str]


@dataclass
class ScenarioResult:
    config: SimConfig
    trace: Trace
    snapshot: Snapshot
    verifications: list[Verification]
    failures: list[str]
    peers: dict[str, Peer]
    global_chain: Optional[PowChain] = None
    active_sessions: list[bytes] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


class Simulator:
    def __init__(self, config: SimConfig):
        if config.backend not in ("personal", "pow"):
            raise UnknownBackend(config.backend)
        names = [p.name for p in config.peers]
        if len(set(names)) != len(names):
            raise ScriptError("peer names must be unique")
        self.config = config
        self.clock = config.start_time
        self.trace = Trace()
        self.net_rng = random.Random(int.from_bytes(_derive(config.seed, b"net"), "big"))
        self.global_chain: Optional[PowChain] = None
        mine_rng = random.Random(int.from_bytes(_derive(config.seed, b"pow"), "big"))
        if config.backend == "pow":
            self.global_chain = PowChain(config.pow_difficulty)
        self.peers: dict[str, Peer] = {}
        self.roles: dict[str, str] = {}
        self.index: dict[bytes, int] = {}
        self.names: dict[bytes, str] = {}
        for i, spec in enumerate(config.peers):
            key = generate_identity(spec.identity_seed)
            rng = random.Random(int.from_bytes(_derive(config.seed, b"peer", u64(i)), "big"))
            backend = (PowBackend(self.global_chain, rng=mine_rng) if self.global_chain is not None
                       else PersonalBackend())
            peer = Peer(key, backend, rng=rng, name=spec.name, behavior=Behavior())
            self.peers[spec.name] = peer
            self.roles[spec.name] = spec.role
            self.index[key.public_key] = i
            self.names[key.public_key] = spec.name
        for p in self.peers.values():
            for q in self.peers.values():
                p.add_peer(q.pk, q.name)
        self.offline: set[str] = set()
        self.drop_next: dict[tuple[str, str], int] = {}
        self._queue: list = []
        self._edge_seq: dict[tuple[str, str], int] = {}
        self._edge_last: dict[tuple[str, str], int] = {}
        self._store_sizes = {n: 0 for n in self.peers}
        self._height = 0
        self._seen_results: set[tuple[str, bytes]] = set()
        self.verifications: list[Verification] = []
        self.failures: list[str] = []
        self.active_sessions: list[bytes] = []

    # -- network -------------------------------------------------------------
    def _peer(self, name: str) -> Peer:
        try:
            return self.peers[name]
        except KeyError:
            raise ScriptError(f"undeclared peer {name!r}") from None

    def _latency(self, spec: LinkSpec) -> int:
        lat = spec.latency_ms
        if isinstance(lat, tuple):
            return self.net_rng.randint(lat[0], lat[1])
        return lat

    def send(self, src_pk: bytes, outgoing, now: int) -> None:
        src = self.names[src_pk]
        for dst_pk, frame in outgoing:
            dst = self.names.get(dst_pk, dst_pk.hex()[:16])
            edge = (src, dst)
            seq = self._edge_seq.get(edge, 0)
            self._edge_seq[edge] = seq + 1
            t = max(now + self._latency(self.config.link(src, dst)), self._edge_last.get(edge, 0))
            self._edge_last[edge] = t
            self.trace.add(now, "send", src=src, dst=dst, seq=seq, type=frame_type(frame).name,
                           session=frame_session(frame).hex(), bytes=len(frame), frame=frame.hex())
            recv_idx = self.index.get(dst_pk, len(self.index))
            heapq.heappush(self._queue, (t, recv_idx, self.index[src_pk], seq, src, dst, dst_pk, frame))

    def run_until_quiet(self) -> None:
        while self._queue:
            t, _, _, seq, src, dst, dst_pk, frame = heapq.heappop(self._queue)
            self.clock = max(self.clock, t)
            now = self.clock
            edge = (src, dst)
            common = dict(src=src, dst=dst, seq=seq, type=frame_type(frame).name)
            sender = self.peers[src]
            if dst not in self.peers or dst in self.offline:
                self.trace.add(now, "unreachable", **common)
                self.send(sender.pk, sender.unreachable(dst_pk, frame, now), now)
            elif self.drop_next.get(edge, 0) > 0:
                self.drop_next[edge] -= 1
                self.trace.add(now, "drop", reason="scripted", **common)
            elif (p := self.config.link(src, dst).drop_probability) > 0 and self.net_rng.random() < p:
                self.trace.add(now, "drop", reason="random", **common)
            else:
                self.trace.add(now, "deliver", **common)
                target = self.peers[dst]
                self.send(target.pk, target.handle(sender.pk, frame, now), now)
            self._observe(now)

    def _observe(self, now: int) -> None:
        for name, peer in self.peers.items():
            blocks = peer.backend.store.blocks()
            for b in blocks[self._store_sizes[name]:]:
                self.trace.add(now, "append", peer=name, chain=self.names.get(b.public_key, "?"),
                               seq=b.sequence_number, type=BlockType(b.block_type).name,
                               hash=b.hash.hex())
            self._store_sizes[name] = len(blocks)
            for sid, r in peer.results.items():
                if (name, sid) in self._seen_results:
                    continue
                self._seen_results.add((name, sid))
                fields = dict(peer=name, session=sid.hex(), role=r.kind, ok=int(r.ok))
                if r.error:
                    fields["error"] = r.error
                if r.outcome is not None:
                    fields["outcome"] = str(r.outcome).replace(" ", "")
                self.trace.add(now, "outcome", **fields)
        if self.global_chain is not None:
            for b in self.global_chain.blocks[self._height:]:
                self.trace.add(now, "mine", height=b.height, entries=len(b.entries),
                               hash=b.hash.hex())
            self._height = len(self.global_chain.blocks)

    def settle(self) -> None:
        self.run_until_quiet()
        for peer in self.peers.values():
            peer.expire(self.clock)
        self._observe(self.clock)

    # -- snapshot ------------------------------------------------------------
    def snapshot(self) -> Snapshot:
        blocks = {}
        for peer in self.peers.values():
            for b in peer.backend.known_blocks():
                blocks.setdefault(b.hash, b)
        presentations = []
        seen = set()
        for peer in self.peers.values():
            for pres in peer.presentations:
                if pres.encode() not in seen:
                    seen.add(pres.encode())
                    presentations.append(pres)
        return Snapshot(list(blocks.values()), presentations)

    # -- script steps --------------------------------------------------------
    def run_step(self, step: Step) -> None:
        self.trace.add(self.clock, "step", line=step.line, text=str(step).replace(" ", "_"))
        handler = getattr(self, "_do_" + step.verb.replace("-", "_"))
        try:
            handler(step, *step.args)
        except ScriptError as exc:
            raise ScriptError(f"line {step.line}: {exc}") from None
        self.settle()

    def _do_attest(self, step, owner, attestor, name, value, fmt, term):
        o, a = self._peer(owner), self._peer(attestor)
        raw = _value_bytes(value, fmt)
        if term.startswith("+"):
            term_ms = self.clock + int(term[1:])
        else:
            term_ms = int(term)
        try:
            _, out = o.begin_attestation(a.pk, name, raw, fmt, term_ms, self.clock)
        except SSIError as exc:
            raise ScriptError(f"cannot attest: {exc.name}: {exc}") from None
        self.send(o.pk, out, self.clock)

    def _do_verify(self, step, verifier, owner, escalation, name, pred, *opts):
        v, o = self._peer(verifier), self._peer(owner)
        try:
            esc = Escalation.parse(escalation)
        except ValueError as exc:
            raise ScriptError(str(exc)) from None
        owned = o.claims.get(name)
        fmt = owned.claim.metadata.proof_format if owned else None
        trusted = [p.pk for n, p in self.peers.items() if self.roles[n] == "attestor"]
        minimum, interactive = 1, False
        for opt in opts:
            if opt.startswith("trusted="):
                trusted = [self._peer(n).pk for n in opt[8:].split("+") if n]
            elif opt.startswith("min="):
                minimum = int(opt[4:])
            elif opt == "interactive":
                interactive = True
            else:
                raise ScriptError(f"unknown verify option {opt!r}")
        policy = VerificationPolicy(frozenset(trusted), minimum, esc, interactive=interactive)
        sid, out = v.begin_verification(o.pk, name, _predicate(pred, fmt), policy, self.clock)
        if esc is Escalation.ACTIVE:
            self.active_sessions.append(sid)
        self.send(v.pk, out, self.clock)
        self.settle()
        r = v.results.get(sid)
        self.verifications.append(Verification(step, verifier, sid, r.outcome if r else None,
                                               r.error if r else "Timeout"))

    def _claim_ref(self, ref: str) -> bytes:
        if "/" in ref:
            owner, name = ref.split("/", 1)
            owned = self._peer(owner).claims.get(name)
            if owned is None or owned.metadata_block_hash is None:
                raise ScriptError(f"no attested claim {ref!r}")
            return owned.metadata_block_hash
        try:
            h = bytes.fromhex(ref)
        except ValueError:
            h = b""
        if len(h) != 32:
            raise ScriptError(f"bad claim reference {ref!r}")
        return h

    def _do_revoke(self, step, attestor, ref):
        a = self._peer(attestor)
        claim_ref = self._claim_ref(ref)
        try:
            block, out = a.revoke(claim_ref, self.clock)
        except SSIError as exc:
            self.trace.add(self.clock, "error", peer=attestor, error=exc.name)
            return
        self.send(a.pk, out, self.clock)

    def _do_keycheck(self, step, verifier, owner):
        v, o = self._peer(verifier), self._peer(owner)
        _, out = v.begin_key_challenge(o.pk, o.pk, self.clock)
        self.send(v.pk, out, self.clock)

    def _do_drop(self, step, src, dst, count):
        self._peer(src), self._peer(dst)
        self.drop_next[(src, dst)] = self.drop_next.get((src, dst), 0) + int(count)

    def _do_advance(self, step, ms):
        if int(ms) < 0:
            raise ScriptError("cannot advance by a negative amount")
        self.clock += int(ms)

    def _do_offline(self, step, name):
        self._peer(name)
        self.offline.add(name)

    def _do_online(self, step, name):
        self._peer(name)
        self.offline.discard(name)

    def _do_whitewash(self, step, owner, seq):
        o = self._peer(owner)
        gone = o.backend.store.discard_from(o.pk, int(seq))
        gone_hashes = {b.hash for b in gone}
        for name in list(o.claims):
            owned = o.claims[name]
            if owned.origin and owned.origin.agreement.hash in gone_hashes:
                del o.claims[name]
            else:
                owned.attestations = [p for p in owned.attestations
                                      if p.agreement.hash not in gone_hashes]
        self._store_sizes[owner] = len(o.backend.store.blocks())
        self.trace.add(self.clock, "whitewash", peer=owner, seq=seq, discarded=len(gone))

    def _do_behave(self, step, name, flag, state):
        p = self._peer(name)
        if flag not in Behavior.__dataclass_fields__ or state not in ("on", "off"):
            raise ScriptError(f"bad behave step {flag} {state}")
        setattr(p.behavior, flag, state == "on")

    def _do_expect(self, step, verdict, *reasons):
        if not self.verifications:
            raise ScriptError("expect before any verification")
        last = self.verifications[-1]
        got = last.outcome
        ok = got is not None and (got.accepted == (verdict == "accepted"))
        ok = ok and all(r in got.reasons for r in reasons)
        self.trace.add(self.clock, "expect", ok=int(ok), want=" ".join((verdict, *reasons)).replace(" ", "+"),
                       got=str(got).replace(" ", "") if got else "none")
        if not ok:
            self.failures.append(f"line {step.line}: expected {' '.join((verdict, *reasons))}, got {got}")

    def _do_expect_audit(self, step, *specs):
        want = {"withheld": 0, "fork": 0}
        for spec in specs:
            k, _, v = spec.partition("=")
            if k not in want:
                raise ScriptError(f"unknown audit count {k!r}")
            want[k] = int(v)
        proofs = audit_global(self.snapshot())
        got = {"withheld": sum(isinstance(p, WithheldRevocation) for p in proofs),
               "fork": sum(isinstance(p, ForkProof) for p in proofs)}
        ok = got == want
        self.trace.add(self.clock, "expect-audit", ok=int(ok), withheld=got["withheld"],
                       fork=got["fork"])
        if not ok:
            self.failures.append(f"line {step.line}: expected audit {want}, got {got}")


def _value_bytes(value: str, fmt: str) -> bytes:
    if fmt == RANGE_BITS:
        try:
            return encode_range_value(int(value))
        except (ValueError, SSIError):
            raise ScriptError(f"range-bits value must be an unsigned 64-bit integer: {value!r}") from None
    return value.encode("utf-8")


def _predicate(text: str, fmt: str | None):
    kind, _, rest = text.partition(":")
    try:
        if kind == "eq":
            return Equals(_value_bytes(rest, fmt) if fmt == RANGE_BITS else rest.encode("utf-8"))
        if kind == "range":
            lo, hi = rest.split(":")
            return InRange(int(lo), int(hi))
    except (ValueError, SSIError) as exc:
        raise ScriptError(f"bad predicate {text!r}: {exc}") from None
    raise ScriptError(f"bad predicate {text!r}")


def run_scenario(config: SimConfig, script: str | list[Step]) -> ScenarioResult:
    steps = parse_script(script) if isinstance(script, str) else script
    sim = Simulator(config)
    for step in steps:
        sim.run_step(step)
    return ScenarioResult(config, sim.trace, sim.snapshot(), sim.verifications, sim.failures,
                          sim.peers, sim.global_chain, sim.active_sessions)
