"""``ssi`` command-line tool.

Exit status: 0 on success, 1 when an operation fails (the error name is
printed on stderr as ``error: <Name>: <detail>``), 2 on usage errors.

Output comes in two renderings selected by ``--format``: ``text`` for
people and ``structured`` with one ``key value`` pair per line, records
closed by a line ``end``.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import random
import secrets
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import errors as errors_module, proofs
from .audit import Snapshot, audit_global, describe, encode_fraud_proof
from .bench import run_bench
from .claims import create_claim
from .encoding import u64
from .errors import (
    InvalidClaim, NotTheAttestor, ScenarioFailed, SSIError, Timeout, UnknownClaim,
    VerificationRejected,
)
from .identity import derive_attribute_key
from .protocol import Peer, VerificationPolicy
from .simnet import Scenario, SimConfig, audit_counts, builtin_scenarios, run_scenario
from .simnet.runner import _predicate, _value_bytes
from .transport import Endpoint, wall_clock
from .workspace import Workspace

STORE_ENV = "SSI_STORE"
_SEED_TAG = b"ssi-ledger/cli-seed"


class UsageError(Exception):
    pass


class Output:
    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def record(self, text: str, **fields) -> None:
        """Print one result: ``text`` in text mode, ``fields`` in structured mode."""
        if self.fmt == "text":
            print(text, file=self.stream)
        else:
            for k, v in fields.items():
                print(f"{k} {v}", file=self.stream)
            print("end", file=self.stream)
        self.stream.flush()


# -- shared helpers ----------------------------------------------------------

def _workspace(args) -> Workspace:
    path = args.store or os.environ.get(STORE_ENV)
    if not path:
        raise UsageError(f"no store: pass --store or set {STORE_ENV}")
    return Workspace(path)


def _clock(args):
    if args.now is not None:
        return lambda: args.now
    return wall_clock


def _rng(args):
    if args.seed is None:
        return secrets.SystemRandom()
    return random.Random(args.seed)


def _open(args) -> tuple[Workspace, Peer]:
    ws = _workspace(args)
    return ws, ws.open_peer(_rng(args))


def _term(text: str, now: int) -> int:
    try:
        return now + int(text[1:]) if text.startswith("+") else int(text)
    except ValueError:
        raise UsageError(f"bad validity term {text!r}") from None


def _value(text: str, fmt: str) -> bytes:
    try:
        return _value_bytes(text, fmt)
    except SSIError as exc:
        raise UsageError(str(exc)) from None


def _book_entries(items: Sequence[str]) -> dict[bytes, str]:
    out = {}
    for item in items or ():
        key, sep, addr = item.partition("=")
        try:
            pk = bytes.fromhex(key)
        except ValueError:
            pk = b""
        if not sep or len(pk) != 32 or not addr:
            raise UsageError(f"--peer expects HEXKEY=ADDRESS, got {item!r}")
        out[pk] = addr
    return out


def _endpoint(args, ws: Workspace, peer: Peer) -> Endpoint:
    book = ws.book()
    book.update(_book_entries(getattr(args, "peer", None)))
    return Endpoint(peer, book, _clock(args), timeout=args.timeout)


def _save(ws: Workspace, peer: Peer, ep: Optional[Endpoint] = None) -> None:
    ws.save_peer(peer, ep.book if ep is not None else None)


def _session_result(peer: Peer, ep: Endpoint, sid: bytes, now: int):
    if not ep.run_until(lambda: sid in peer.results):
        peer.expire(now)
    return peer.results.get(sid)


# -- id ----------------------------------------------------------------------

def cmd_id(args, out: Output) -> int:
    ws = _workspace(args)
    if args.action == "new":
        if args.seed is None:
            seed = secrets.token_bytes(32)
        else:
            seed = hashlib.sha256(_SEED_TAG + u64(args.seed)).digest()
        key = ws.create_identity(seed)
    else:
        key = ws.identity()
    if args.action == "derive":
        attr = derive_attribute_key(key, args.name)
        out.record(attr.public_key.hex(), attribute=args.name, public_key=attr.public_key.hex())
    else:
        out.record(key.public_key.hex(), public_key=key.public_key.hex())
    return 0


# -- claim -------------------------------------------------------------------

def _claim_fields(name, claim, witness, status, mbh, attestors) -> dict:
    md = claim.metadata
    return {"name": name, "status": status, "proof_format": md.proof_format,
            "timestamp": md.timestamp, "validity_term": md.validity_term,
            "proof_link": md.proof_link.hex(), "commitment": claim.commitment.hex(),
            "metadata_block_hash": mbh.hex() if mbh else "-",
            "attestors": "+".join(a.hex() for a in attestors) or "-"}


def _claims(peer: Peer) -> list[dict]:
    rows = []
    for name, (c, w) in sorted(peer.pending_claims.items()):
        rows.append(_claim_fields(name, c, w, "pending", None, []))
    for name, owned in sorted(peer.claims.items()):
        rows.append(_claim_fields(name, owned.claim, owned.witness, "attested",
                                  owned.metadata_block_hash, owned.attestors()))
    return sorted(rows, key=lambda r: r["name"])


def cmd_claim(args, out: Output) -> int:
    ws, peer = _open(args)
    if args.action == "new":
        if args.name in peer.claims or args.name in peer.pending_claims:
            raise InvalidClaim(f"claim {args.name!r} already exists")
        now = _clock(args)()
        claim, witness = create_claim(peer.key, args.name, _value(args.value, args.proof),
                                      _term(args.term, now), args.proof, now, peer.rng)
        peer.pending_claims[args.name] = (claim, witness)
        _save(ws, peer)
        f = _claim_fields(args.name, claim, witness, "pending", None, [])
        out.record(f"pending {args.name} {args.proof} {f['proof_link']}", **f)
        return 0
    rows = _claims(peer)
    if args.action == "show":
        rows = [r for r in rows if r["name"] == args.name]
        if not rows:
            raise UnknownClaim(args.name)
        out.record("\n".join(f"{k}: {v}" for k, v in rows[0].items()), **rows[0])
        return 0
    for r in rows:
        out.record(f"{r['name']} {r['proof_format']} {r['status']} "
                   f"attestors={0 if r['attestors'] == '-' else r['attestors'].count('+') + 1} "
                   f"{r['metadata_block_hash'][:16]}", **r)
    return 0


# -- networked commands ------------------------------------------------------

def cmd_serve(args, out: Output) -> int:
    ws, peer = _open(args)
    ep = _endpoint(args, ws, peer)
    ep.serve(args.listen)
    out.record(f"listening {peer.pk.hex()} {args.listen}", public_key=peer.pk.hex(),
               listen=args.listen)
    reported = set(peer.results)
    try:
        while args.sessions == 0 or ep.closed_inbound < args.sessions:
            ep.poll(0.2)
            for sid, res in list(peer.results.items()):
                if sid in reported:
                    continue
                reported.add(sid)
                status = "ok" if res.ok else res.error
                text = str(res.outcome) if res.outcome is not None else status
                out.record(f"session {sid.hex()} {res.kind} {text}", session=sid.hex(),
                           kind=res.kind, status=status)
            _save(ws, peer, ep)
    except KeyboardInterrupt:
        pass
    finally:
        peer.expire(ep.clock())
        _save(ws, peer, ep)
        ep.close()
    return 0


def cmd_attest(args, out: Output) -> int:
    ws, peer = _open(args)
    now = _clock(args)()
    if args.name not in peer.claims and args.name not in peer.pending_claims:
        if args.value is None or args.proof is None:
            raise UsageError(f"no claim {args.name!r}: give VALUE and --proof to create it")
        claim, witness = create_claim(peer.key, args.name, _value(args.value, args.proof),
                                      _term(args.term, now), args.proof, now, peer.rng)
        peer.pending_claims[args.name] = (claim, witness)
    ep = _endpoint(args, ws, peer)
    try:
        attestor = ep.connect(args.connect)
        sid, outgoing = peer.begin_attestation(attestor, args.name, b"", "", 0, now)
        ep.route(outgoing)
        res = _session_result(peer, ep, sid, now)
    finally:
        _save(ws, peer, ep)
        ep.close()
    if res is None or not res.ok:
        name = res.error if res is not None else "Timeout"
        raise getattr(errors_module, name, Timeout)(f"attestation of {args.name} failed")
    pair = res.detail
    out.record(f"attested {args.name} by {attestor.hex()} block {pair.agreement.hash.hex()}",
               name=args.name, attestor=attestor.hex(), agreement=pair.agreement.hash.hex(),
               proposal=pair.proposal.hash.hex())
    return 0


def _cli_predicate(text: str):
    if text.startswith("eq-int:"):
        return _predicate("eq:" + text[7:], proofs.RANGE_BITS)
    try:
        return _predicate(text, None)
    except SSIError as exc:
        raise UsageError(str(exc)) from None


def cmd_verify(args, out: Output) -> int:
    try:
        policy = VerificationPolicy.parse(args.policy)
    except ValueError as exc:
        raise UsageError(f"bad --policy: {exc}") from None
    predicate = _cli_predicate(args.predicate)
    ws, peer = _open(args)
    now = _clock(args)()
    ep = _endpoint(args, ws, peer)
    try:
        owner = ep.connect(args.connect)
        sid, outgoing = peer.begin_verification(owner, args.name, predicate, policy, now)
        ep.route(outgoing)
        res = _session_result(peer, ep, sid, now)
    finally:
        _save(ws, peer, ep)
        ep.close()
    outcome = res.outcome if res is not None else None
    if outcome is None:
        raise Timeout("no verification outcome")
    out.record(str(outcome), outcome="accepted" if outcome.accepted else "rejected",
               reasons="+".join(outcome.reasons) or "-", session=sid.hex())
    if not outcome.accepted:
        raise VerificationRejected(", ".join(outcome.reasons))
    return 0


def cmd_revoke(args, out: Output) -> int:
    ws, peer = _open(args)
    now = _clock(args)()
    try:
        ref = bytes.fromhex(args.ref)
    except ValueError:
        raise UsageError("REF must be a hex metadata block hash") from None
    if ref not in peer.attested:
        raise NotTheAttestor(f"no attestation of {args.ref[:16]} on this identity")
    ep = _endpoint(args, ws, peer)
    try:
        for addr in args.announce or ():
            peer.add_peer(ep.connect(addr), addr)
        block, outgoing = peer.revoke(ref, now)
        ep.route(outgoing)
        ep.run_until(lambda: False, timeout=0.05)
    finally:
        _save(ws, peer, ep)
        ep.close()
    out.record(f"revoked {ref.hex()} block {block.hash.hex()} announced {len(outgoing)}",
               claim=ref.hex(), block=block.hash.hex(), announced=len(outgoing))
    return 0


# -- audit / sim / bench -----------------------------------------------------

def cmd_audit(args, out: Output) -> int:
    if args.snapshot:
        snap = Snapshot.load(args.snapshot)
    else:
        _, peer = _open(args)
        snap = Snapshot(peer.backend.known_blocks(), list(peer.presentations))
    found = audit_global(snap)
    out.record(f"fraud proofs: {len(found)}", proofs=len(found))
    for i, p in enumerate(found):
        out.record(f"{i} {describe(p)}", index=i, kind=type(p).__name__,
                   evidence=encode_fraud_proof(p).hex())
    return 0


def _scenario(args) -> Scenario:
    if args.scenario:
        table = builtin_scenarios()
        if args.scenario not in table:
            raise UsageError(f"unknown scenario {args.scenario!r}; see sim --list")
        return table[args.scenario]
    text = Path(args.script).read_text()
    extra = []
    for item in args.extra_peer or ():
        name, sep, role = item.partition(":")
        if not sep:
            raise UsageError(f"--extra-peer expects NAME:ROLE, got {item!r}")
        extra.append((name, role))
    return Scenario(Path(args.script).stem, text, extra_peers=tuple(extra))


def cmd_sim(args, out: Output) -> int:
    if args.list:
        for name, sc in builtin_scenarios().items():
            out.record(f"{name}{'' if sc.honest else ' (adversarial)'}", name=name,
                       honest=int(sc.honest))
        return 0
    if not (args.scenario or args.script):
        raise UsageError("sim needs --scenario NAME, --script FILE or --list")
    sc = _scenario(args)
    seed = 7 if args.seed is None else args.seed
    config: SimConfig = sc.config(seed, args.backend, pow_difficulty=args.pow_difficulty)
    result = run_scenario(config, sc.script)
    if args.trace_out:
        trace = result.trace.text() if args.format == "text" else result.trace.structured()
        Path(args.trace_out).write_text(trace)
    if args.snapshot_out:
        result.snapshot.save(args.snapshot_out)
    for v in result.verifications:
        outcome = str(v.outcome) if v.outcome is not None else f"error {v.error}"
        out.record(f"line {v.step.line} {v.verifier}: {outcome}", line=v.step.line,
                   verifier=v.verifier, outcome=outcome)
    counts = audit_counts(result)
    verdict = "passed" if result.passed else "failed"
    out.record(f"scenario {sc.name} backend={args.backend} seed={seed} events={len(result.trace.events)} "
               f"withheld={counts['withheld']} fork={counts['fork']} {verdict}",
               scenario=sc.name, backend=args.backend, seed=seed, events=len(result.trace.events),
               withheld=counts["withheld"], fork=counts["fork"], result=verdict)
    if not result.passed:
        raise ScenarioFailed("; ".join(result.failures))
    return 0


def cmd_bench(args, out: Output) -> int:
    if args.iterations < 1 or args.value_bytes < 1:
        raise UsageError("--iterations and --value-bytes must be positive")
    report = run_bench(args.backend, args.iterations, args.value_bytes,
                       0 if args.seed is None else args.seed, args.persist)
    if args.csv:
        Path(args.csv).write_text(report.csv_text())
    print(report.text() if args.format == "text" else report.structured(), end="")
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help=f"store directory (default: ${STORE_ENV})")
    common.add_argument("--seed", type=int, help="deterministic seed (identity, RNG, scenario)")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--now", type=int, help="fixed clock in epoch milliseconds")
    common.add_argument("--timeout", type=float, default=10.0, help="network wait in seconds")

    p = argparse.ArgumentParser(prog="ssi", description="Attested claims on pairwise ledgers.")
    sub = p.add_subparsers(dest="command", required=True)

    ids = sub.add_parser("id", help="identity key").add_subparsers(dest="action", required=True)
    ids.add_parser("new", parents=[common], help="create this store's identity")
    ids.add_parser("show", parents=[common], help="print the public key")
    s = ids.add_parser("derive", parents=[common], help="print a per-attribute public key")
    s.add_argument("name")

    claims = sub.add_parser("claim", help="local claims").add_subparsers(dest="action", required=True)
    s = claims.add_parser("new", parents=[common], help="commit to a value (attest it next)")
    s.add_argument("name")
    s.add_argument("value", help="unsigned integer for range-bits.v1, text otherwise")
    s.add_argument("--proof", default=proofs.RANGE_BITS, choices=proofs.formats())
    s.add_argument("--term", default="0", help="validity term: 0, epoch ms, or +MS")
    claims.add_parser("list", parents=[common])
    s = claims.add_parser("show", parents=[common])
    s.add_argument("name")

    s = sub.add_parser("serve", parents=[common], help="answer protocol sessions")
    s.add_argument("--listen", required=True, help="HOST:PORT or socket path")
    s.add_argument("--peer", action="append", help="HEXKEY=ADDRESS address book entry")
    s.add_argument("--sessions", type=int, default=0, help="exit after N inbound connections close")

    s = sub.add_parser("attest", parents=[common], help="get a claim attested")
    s.add_argument("--connect", required=True)
    s.add_argument("name")
    s.add_argument("value", nargs="?")
    s.add_argument("--proof", choices=proofs.formats())
    s.add_argument("--term", default="0")

    s = sub.add_parser("verify", parents=[common], help="verify an owner's claim")
    s.add_argument("--connect", required=True)
    s.add_argument("--policy", required=True,
                   help="trusted=K1+K2,min=N,escalation=passive|intent|active[,interactive=1]")
    s.add_argument("name")
    s.add_argument("predicate", help="eq:TEXT, eq-int:N or range:LO:HI")

    s = sub.add_parser("revoke", parents=[common], help="revoke an attestation")
    s.add_argument("ref", help="metadata block hash (hex)")
    s.add_argument("--announce", action="append", help="address to announce the revocation to")

    s = sub.add_parser("audit", parents=[common], help="search for fraud proofs")
    s.add_argument("--snapshot", help="snapshot directory (default: this store)")

    s = sub.add_parser("sim", parents=[common], help="run a simulated scenario")
    s.add_argument("--scenario")
    s.add_argument("--script")
    s.add_argument("--list", action="store_true")
    s.add_argument("--backend", choices=("personal", "pow"), default="personal")
    s.add_argument("--pow-difficulty", type=int, default=8)
    s.add_argument("--extra-peer", action="append", help="NAME:ROLE for --script runs")
    s.add_argument("--trace-out")
    s.add_argument("--snapshot-out")

    s = sub.add_parser("bench", parents=[common], help="time attest and verify")
    s.add_argument("--backend", action="append", help="proof format (repeatable; default all)")
    s.add_argument("--iterations", type=int, default=100)
    s.add_argument("--value-bytes", type=int, default=20)
    s.add_argument("--csv", help="write raw samples here")
    s.add_argument("--persist", action="store_true", help="time with on-disk stores")
    return p


COMMANDS = {"id": cmd_id, "claim": cmd_claim, "serve": cmd_serve, "attest": cmd_attest,
            "verify": cmd_verify, "revoke": cmd_revoke, "audit": cmd_audit, "sim": cmd_sim,
            "bench": cmd_bench}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        parser.error(str(exc))
    except SSIError as exc:
        print(f"error: {exc.name}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
