"""Parse operator notes and Suricata EVE logs into one time-ordered stream.

OpNotes format: an entry starts with a timestamp token (ISO-8601 or
``YYYY-MM-DD HH:MM[:SS]``) followed by text. Lines without a leading
timestamp continue the entry above them; a blank line ends an entry, so a
block that does not open with a timestamp has nothing to attach to and is
rejected line by line.

Bad lines never abort a parse. They go to a reject list with their line
number and a reason, and only a file that is mostly rejects is treated as
a format error.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, TextIO, Union

from .records import SchemaError, format_timestamp, iter_jsonl, parse_timestamp, write_jsonl

EVENT_KINDS = ("alert", "flow", "dns", "http", "other")
REJECT_LIMIT = 0.5

# leading timestamp candidates; validity is decided by parse_timestamp
_TS_TOKEN = re.compile(
    r"^\s*\[?(\d{4}-\d{2}-\d{2}(?:[T ]\d{1,2}:\d{2}(?::\d{2}(?:\.\d+)?)?)?(?:Z|[+-]\d{2}:?\d{2})?)\]?(?=\s|$)"
)


class FormatError(ValueError):
    """The input as a whole does not look like the expected format."""


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str
    text: str

    def to_dict(self) -> dict[str, Any]:
        return {"line": self.line, "reason": self.reason, "text": self.text}


@dataclass(frozen=True)
class OpNoteEntry:
    timestamp: datetime
    participant_id: str
    text: str
    line: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("note text is empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "opnote",
            "timestamp": format_timestamp(self.timestamp),
            "participant_id": self.participant_id,
            "text": self.text,
        }


@dataclass(frozen=True)
class NetEvent:
    timestamp: datetime
    src_ip: str | None
    dst_ip: str | None
    dst_port: int
    event_kind: str
    signature: str | None = None
    payload_summary: str | None = None

    def __post_init__(self):
        if not 0 <= self.dst_port <= 65535:
            raise ValueError(f"dst_port {self.dst_port} out of range")
        if self.event_kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.event_kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "netevent",
            "timestamp": format_timestamp(self.timestamp, ms=True),
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "dst_port": self.dst_port,
            "event_kind": self.event_kind,
            "signature": self.signature,
            "payload_summary": self.payload_summary,
        }


Entry = Union[OpNoteEntry, NetEvent]


@dataclass(frozen=True)
class RawTimeline:
    participant_id: str
    entries: tuple[Entry, ...]

    @property
    def notes(self) -> list[OpNoteEntry]:
        return [e for e in self.entries if isinstance(e, OpNoteEntry)]

    @property
    def events(self) -> list[NetEvent]:
        return [e for e in self.entries if isinstance(e, NetEvent)]

    def __len__(self) -> int:
        return len(self.entries)


def _lines(source: Union[str, TextIO, Iterable[str]]) -> list[str]:
    if isinstance(source, str):
        return source.splitlines()
    return [ln.rstrip("\r\n") for ln in source]


# -- OpNotes -------------------------------------------------------------------------


def parse_opnotes(source, participant_id: str) -> tuple[list[OpNoteEntry], list[Reject]]:
    """Parse one participant's notes; returns ``(entries, rejects)``.

    Raises ``FormatError`` when more than half of the non-blank lines are
    rejected.
    """
    entries: list[OpNoteEntry] = []
    rejects: list[Reject] = []
    current: tuple[datetime, int, list[str]] | None = None
    n_lines = 0
    n_rejected = 0

    def flush():
        nonlocal current, n_rejected
        if current is not None:
            ts, start, parts = current
            text = " ".join(parts).strip()
            if text:
                entries.append(OpNoteEntry(ts, participant_id, text, start))
            else:
                rejects.append(Reject(start, "timestamp without note text", ""))
                n_rejected += 1
            current = None

    for lineno, raw in enumerate(_lines(source), 1):
        line = raw.strip()
        if not line:
            flush()
            continue
        n_lines += 1
        m = _TS_TOKEN.match(line)
        if m:
            flush()
            try:
                ts = parse_timestamp(m.group(1))
            except ValueError:
                rejects.append(Reject(lineno, f"unparseable timestamp {m.group(1)!r}", raw))
                n_rejected += 1
                # continuation lines of a bad entry are orphans too
                current = None
                continue
            current = (ts.replace(microsecond=0), lineno, [line[m.end():].strip()])
        elif current is not None:
            current[2].append(line)
        else:
            rejects.append(Reject(lineno, "no timestamp at start of block", raw))
            n_rejected += 1
    flush()

    if n_lines and n_rejected / n_lines > REJECT_LIMIT:
        raise FormatError(
            f"likely wrong file format: {n_rejected} of {n_lines} lines rejected"
        )
    return entries, rejects


# -- Suricata EVE ------------------------------------------------------------------------


def _port(value: Any) -> int:
    if value is None:
        return 0
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValueError(f"bad port {value!r}")
    return int(value)


def _summary(obj: dict[str, Any], kind: str) -> str | None:
    if kind == "dns":
        dns = obj.get("dns") or {}
        return dns.get("rrname")
    if kind == "http":
        http = obj.get("http") or {}
        parts = [http.get("http_method"), http.get("hostname"), http.get("url")]
        text = " ".join(str(p) for p in parts if p)
        return text or None
    if kind == "flow":
        flow = obj.get("flow") or {}
        if "pkts_toserver" in flow or "pkts_toclient" in flow:
            return f"pkts {flow.get('pkts_toserver', 0)}/{flow.get('pkts_toclient', 0)}"
    return None


def eve_event(obj: dict[str, Any]) -> NetEvent:
    """Map one decoded EVE object to a NetEvent; raises ValueError when unusable."""
    if not isinstance(obj, dict):
        raise ValueError("not a JSON object")
    if "timestamp" not in obj or "event_type" not in obj:
        raise ValueError("missing timestamp or event_type")
    ts = parse_timestamp(str(obj["timestamp"]))
    ts = ts.replace(microsecond=ts.microsecond // 1000 * 1000)
    etype = obj["event_type"]
    kind = etype if etype in EVENT_KINDS else "other"
    signature = None
    if kind == "alert":
        signature = (obj.get("alert") or {}).get("signature")
    return NetEvent(
        timestamp=ts,
        src_ip=obj.get("src_ip"),
        dst_ip=obj.get("dest_ip"),
        dst_port=_port(obj.get("dest_port")),
        event_kind=kind,
        signature=signature,
        payload_summary=_summary(obj, kind),
    )


def parse_eve(source) -> tuple[list[NetEvent], list[Reject]]:
    """Parse EVE JSON lines; returns ``(events, rejects)``.

    Raises ``FormatError`` if there were lines but none of them parsed.
    """
    events: list[NetEvent] = []
    rejects: list[Reject] = []
    n_lines = 0
    for lineno, raw in enumerate(_lines(source), 1):
        if not raw.strip():
            continue
        n_lines += 1
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            rejects.append(Reject(lineno, f"not JSON: {exc.msg}", raw))
            continue
        try:
            events.append(eve_event(obj))
        except (ValueError, TypeError, AttributeError) as exc:
            rejects.append(Reject(lineno, str(exc), raw))
    if n_lines and not events:
        raise FormatError(f"no parseable EVE events in {n_lines} lines")
    return events, rejects


# -- timeline ----------------------------------------------------------------------------


def merge_timeline(notes: Iterable[OpNoteEntry], events: Iterable[NetEvent], participant_id: str) -> RawTimeline:
    """Sort notes and events by time; notes first on ties, then input order."""
    keyed = [(n.timestamp, 0, i, n) for i, n in enumerate(notes)]
    keyed += [(e.timestamp, 1, i, e) for i, e in enumerate(events)]
    keyed.sort(key=lambda k: k[:3])
    return RawTimeline(participant_id, tuple(k[3] for k in keyed))


def entry_from_dict(d: dict[str, Any]) -> Entry:
    kind = d.get("kind")
    if kind == "opnote":
        return OpNoteEntry(parse_timestamp(d["timestamp"]), str(d["participant_id"]), d["text"])
    if kind == "netevent":
        return NetEvent(
            timestamp=parse_timestamp(d["timestamp"]),
            src_ip=d.get("src_ip"),
            dst_ip=d.get("dst_ip"),
            dst_port=int(d.get("dst_port", 0)),
            event_kind=d["event_kind"],
            signature=d.get("signature"),
            payload_summary=d.get("payload_summary"),
        )
    raise ValueError(f"unknown entry kind {kind!r}")


def write_timeline(path: str | Path, timeline: RawTimeline) -> int:
    rows = []
    for e in timeline.entries:
        d = e.to_dict()
        d["participant_id"] = timeline.participant_id
        rows.append(d)
    return write_jsonl(path, rows)


def read_timeline(path: str | Path, participant_id: str | None = None) -> RawTimeline:
    """Read a timeline written by ``write_timeline``; entries keep file order."""
    entries = []
    pids = set()
    for lineno, obj in iter_jsonl(path):
        try:
            entries.append(entry_from_dict(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid timeline entry: {exc}", line=lineno) from None
        if "participant_id" in obj:
            pids.add(str(obj["participant_id"]))
    if participant_id is None:
        if len(pids) > 1:
            raise SchemaError(f"timeline mixes participants: {sorted(pids)}")
        participant_id = pids.pop() if pids else Path(path).stem
    return RawTimeline(participant_id, tuple(entries))


def write_rejects(path: str | Path, rejects: Iterable[Reject], source: str = "") -> int:
    return write_jsonl(path, ({"source": source, **r.to_dict()} for r in rejects))
