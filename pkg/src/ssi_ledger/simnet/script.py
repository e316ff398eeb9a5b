"""Scenario scripts: one step per line, ``#`` starts a comment.

Verbs::

    attest OWNER ATTESTOR NAME VALUE FORMAT TERM
        VALUE is an unsigned integer for range-bits.v1, text otherwise.
        TERM is 0 (no expiry), an absolute epoch-ms, or +MS relative to now.
    verify VERIFIER OWNER passive|intent|active NAME PRED [trusted=P1+P2] [min=N] [interactive]
        PRED is eq:TEXT, eq:INT (range-bits.v1 claims) or range:LO:HI.
    revoke ATTESTOR OWNER/NAME | ATTESTOR HEX_METADATA_BLOCK_HASH
    keycheck VERIFIER OWNER
    drop FROM TO NEXT           drop the next NEXT messages on that edge
    advance MS
    offline PEER | online PEER
    whitewash OWNER SEQ         owner forgets its own chain from SEQ on
    behave PEER FLAG on|off     see protocol Behavior for flags
    expect accepted|rejected [REASON ...]   checks the latest verification
    expect-audit withheld=N fork=M          checks audit_global over the current snapshot
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass

from ..errors import ScriptError

_ARITY = {
    "attest": (6, 6), "verify": (5, 8), "revoke": (2, 2), "keycheck": (2, 2), "drop": (3, 3),
    "advance": (1, 1), "offline": (1, 1), "online": (1, 1), "whitewash": (2, 2),
    "behave": (3, 3), "expect": (1, 32), "expect-audit": (1, 2),
}


@dataclass(frozen=True)
class Step:
    line: int
    verb: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join((self.verb, *self.args))


def parse_script(text: str) -> list[Step]:
    steps = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            words = shlex.split(line)
        except ValueError as exc:
            raise ScriptError(f"line {n}: {exc}") from None
        verb, args = words[0], tuple(words[1:])
        if verb not in _ARITY:
            raise ScriptError(f"line {n}: unknown verb {verb!r}")
        lo, hi = _ARITY[verb]
        if not lo <= len(args) <= hi:
            raise ScriptError(f"line {n}: {verb} takes {lo}..{hi} arguments, got {len(args)}")
        steps.append(Step(n, verb, args))
    return steps
