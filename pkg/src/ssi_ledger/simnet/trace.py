"""Simulation traces in two stable renderings.

Text: one line per event, ``<time> <kind> key=value ...``.

Structured: one field per line, events separated by a line ``end``::

    event <index>
    time <epoch ms>
    kind <kind>
    <field> <value>
    ...
    end

Field values never contain newlines. ``frame`` fields hold the raw wire
frame in lowercase hex.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Event:
    time: int
    kind: str
    fields: tuple[tuple[str, str], ...] = ()

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.fields:
            if k == key:
                return v
        return default


@dataclass
class Trace:
    events: list[Event] = field(default_factory=list)

    def add(self, time: int, kind: str, **fields) -> Event:
        ev = Event(time, kind, tuple((k, str(v)) for k, v in fields.items()))
        self.events.append(ev)
        return ev

    def of_kind(self, *kinds: str) -> list[Event]:
        return [e for e in self.events if e.kind in kinds]

    def text(self) -> str:
        lines = []
        for e in self.events:
            parts = [str(e.time), e.kind]
            parts += [f"{k}={v}" for k, v in e.fields if k != "frame"]
            lines.append(" ".join(parts))
        return "\n".join(lines) + ("\n" if lines else "")

    def structured(self) -> str:
        out = []
        for i, e in enumerate(self.events):
            out += [f"event {i}", f"time {e.time}", f"kind {e.kind}"]
            out += [f"{k} {v}" for k, v in e.fields]
            out.append("end")
        return "\n".join(out) + ("\n" if out else "")

    @classmethod
    def parse_structured(cls, text: str) -> "Trace":
        trace = cls()
        cur: dict | None = None
        for line in text.splitlines():
            key, _, val = line.partition(" ")
            if key == "event":
                cur = {"fields": []}
            elif key == "end":
                trace.events.append(Event(cur["time"], cur["kind"], tuple(cur["fields"])))
                cur = None
            elif key == "time":
                cur["time"] = int(val)
            elif key == "kind":
                cur["kind"] = val
            else:
                cur["fields"].append((key, val))
        return trace
