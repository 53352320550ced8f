"""Shared record types, timestamp helpers and JSON-lines I/O.

``ActionRecord`` is the hand-off format between annotation (or simulation)
and the bias models, so both producers validate against the same rules here.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator

TECHNIQUE_RE = re.compile(r"^T\d{4}(\.\d{3})?$")
UNMAPPED_TECHNIQUE = "T0000"
EXCERPT_LIMIT = 240


class SchemaError(ValueError):
    """A record does not satisfy its schema.

    ``line`` carries the 1-based line number when the record was read
    from a JSON-lines file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Tactic(str, Enum):
    # declaration order is the reporting order
    RECONNAISSANCE = "Reconnaissance"
    DISCOVERY = "Discovery"
    INITIAL_ACCESS = "InitialAccess"
    EXECUTION = "Execution"
    PERSISTENCE = "Persistence"
    PRIVILEGE_ESCALATION = "PrivilegeEscalation"
    DEFENSE_EVASION = "DefenseEvasion"
    CREDENTIAL_ACCESS = "CredentialAccess"
    LATERAL_MOVEMENT = "LateralMovement"
    COLLECTION = "Collection"
    EXFILTRATION = "Exfiltration"
    COMMAND_AND_CONTROL = "CommandAndControl"
    IMPACT = "Impact"
    UNKNOWN = "Unknown"


TACTIC_ORDER = [t.value for t in Tactic]
ACTION_STYLES = ("aggressive", "stealthy", "unknown")
OUTCOMES = ("success", "failure", "unknown")


# -- timestamps --------------------------------------------------------------

_TZ_COMPACT = re.compile(r"([+-]\d{2})(\d{2})$")


def parse_timestamp(text: str) -> datetime:
    """Parse ISO-8601 or ``YYYY-MM-DD HH:MM[:SS]`` into an aware UTC datetime.

    Naive timestamps are taken as UTC. Raises ``ValueError`` on anything else.
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    s = _TZ_COMPACT.sub(r"\1:\2", s)
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime, ms: bool = False) -> str:
    dt = dt.astimezone(timezone.utc)
    if ms:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


# -- ATT&CK catalog ----------------------------------------------------------


@dataclass(frozen=True)
class TechniqueInfo:
    technique_id: str
    name: str
    tactic: str
    style: str = "unknown"
    complexity: float = 0.5


def load_attack_catalog(path: str | Path | None = None) -> dict[str, TechniqueInfo]:
    """Technique id -> catalog entry. Defaults to the bundled catalog."""
    if path is None:
        raw = json.loads(resources.files("ambisense.data").joinpath("attack_catalog.json").read_text("utf-8"))
    else:
        raw = json.loads(Path(path).read_text("utf-8"))
    catalog = {}
    for item in raw["techniques"]:
        info = TechniqueInfo(
            technique_id=item["technique_id"],
            name=item["name"],
            tactic=item["tactic"],
            style=item.get("style", "unknown"),
            complexity=float(item.get("complexity", 0.5)),
        )
        if not TECHNIQUE_RE.match(info.technique_id):
            raise SchemaError(f"bad technique id in catalog: {info.technique_id!r}")
        if info.tactic not in TACTIC_ORDER:
            raise SchemaError(f"bad tactic in catalog: {info.tactic!r}")
        catalog[info.technique_id] = info
    return catalog


def catalog_tactic(technique_id: str, catalog: dict[str, TechniqueInfo]) -> str:
    info = catalog.get(technique_id)
    return info.tactic if info is not None else Tactic.UNKNOWN.value


# -- ActionRecord --------------------------------------------------------------


@dataclass(frozen=True)
class ActionRecord:
    timestamp: datetime
    participant_id: str
    technique_id: str
    tactic: str
    target: str | None = None
    action_style: str = "unknown"
    outcome: str = "unknown"
    source_excerpt: str = ""
    confidence: float = 0.9

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["timestamp"] = format_timestamp(self.timestamp)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ActionRecord":
        try:
            rec = cls(
                timestamp=parse_timestamp(d["timestamp"]),
                participant_id=str(d["participant_id"]),
                technique_id=d["technique_id"],
                tactic=d["tactic"],
                target=d.get("target"),
                action_style=d.get("action_style", "unknown"),
                outcome=d.get("outcome", "unknown"),
                source_excerpt=d.get("source_excerpt", ""),
                confidence=float(d.get("confidence", 0.9)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid action record: {exc}") from None
        return rec


def validate_record(rec: ActionRecord, catalog: dict[str, TechniqueInfo] | None = None) -> None:
    """Raise ``SchemaError`` unless ``rec`` satisfies the ActionRecord contract."""
    if not TECHNIQUE_RE.match(rec.technique_id):
        raise SchemaError(f"technique_id {rec.technique_id!r} is not an ATT&CK id")
    if rec.tactic not in TACTIC_ORDER:
        raise SchemaError(f"unknown tactic {rec.tactic!r}")
    if rec.action_style not in ACTION_STYLES:
        raise SchemaError(f"unknown action_style {rec.action_style!r}")
    if rec.outcome not in OUTCOMES:
        raise SchemaError(f"unknown outcome {rec.outcome!r}")
    if not 0.0 <= rec.confidence <= 1.0:
        raise SchemaError(f"confidence {rec.confidence} outside [0, 1]")
    if len(rec.source_excerpt) > EXCERPT_LIMIT:
        raise SchemaError("source_excerpt longer than 240 characters")
    if rec.timestamp.tzinfo is None:
        raise SchemaError("timestamp must be timezone-aware")
    if catalog is not None and rec.tactic != Tactic.UNKNOWN.value:
        expected = catalog_tactic(rec.technique_id, catalog)
        if rec.tactic != expected:
            raise SchemaError(f"tactic {rec.tactic} inconsistent with catalog tactic {expected} for {rec.technique_id}")


# -- JSON lines ----------------------------------------------------------------


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: str | Path, rows: Iterable[dict[str, Any]]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(dumps_canonical(row))
            fh.write("\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_number, object)``; blank lines skipped, bad JSON raises SchemaError."""
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not JSON ({exc.msg})", line=lineno) from None
            if not isinstance(obj, dict):
                raise SchemaError("expected a JSON object", line=lineno)
            yield lineno, obj


def read_actions(path: str | Path, catalog: dict[str, TechniqueInfo] | None = None) -> list[ActionRecord]:
    records = []
    for lineno, obj in iter_jsonl(path):
        try:
            rec = ActionRecord.from_dict(obj)
            validate_record(rec, catalog)
        except SchemaError as exc:
            raise SchemaError(str(exc), line=lineno) from None
        records.append(rec)
    return records


def write_actions(path: str | Path, records: Iterable[ActionRecord]) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))
