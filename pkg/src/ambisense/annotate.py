"""Turn timeline entries into ATT&CK-tagged action records.

Two annotators share one output schema. The lexicon annotator is a list
of regex rules where the first match wins; it is deterministic and is the
reference path. The remote annotator posts batches of notes to an HTTP
service (an LLM front end, say) and falls back to the lexicon for any
batch that keeps failing.

Network events never create actions of their own. A post-pass lets them
fill in a missing target or outcome for a nearby note.
"""

from __future__ import annotations

import ipaddress
import json
import logging
import os
import re
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import timedelta
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from .ingest import NetEvent, OpNoteEntry, RawTimeline
from .records import (
    ACTION_STYLES,
    EXCERPT_LIMIT,
    TECHNIQUE_RE,
    ActionRecord,
    SchemaError,
    TechniqueInfo,
    catalog_tactic,
    format_timestamp,
    load_attack_catalog,
    validate_record,
)

log = logging.getLogger(__name__)

RULE_CONFIDENCE = 0.9
FALLBACK_CONFIDENCE = 0.5


# -- lexicon ---------------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeCues:
    success_patterns: tuple[re.Pattern, ...] = ()
    failure_patterns: tuple[re.Pattern, ...] = ()

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "OutcomeCues":
        return cls(
            tuple(re.compile(p, re.IGNORECASE) for p in d.get("success_patterns", [])),
            tuple(re.compile(p, re.IGNORECASE) for p in d.get("failure_patterns", [])),
        )

    def outcome(self, text: str) -> str:
        # failure is checked first: "the exploit failed, got a shell later" is
        # more often a failed attempt than a success
        if any(p.search(text) for p in self.failure_patterns):
            return "failure"
        if any(p.search(text) for p in self.success_patterns):
            return "success"
        return "unknown"


@dataclass(frozen=True)
class LexiconRule:
    rule_id: str
    pattern: re.Pattern
    technique_id: str
    tactic: str
    action_style: str
    outcome_cues: OutcomeCues | None = None


@dataclass(frozen=True)
class Lexicon:
    rules: tuple[LexiconRule, ...]
    version: str
    outcome_cues: OutcomeCues = field(default_factory=OutcomeCues)

    @classmethod
    def from_dict(cls, d: dict[str, Any], catalog: dict[str, TechniqueInfo] | None = None) -> "Lexicon":
        """Build and validate a lexicon; bad rules raise ``SchemaError``.

        A rule's ``action_style`` defaults to the catalog's style for its
        technique; its tactic must agree with the catalog.
        """
        catalog = load_attack_catalog() if catalog is None else catalog
        if "version" not in d:
            raise SchemaError("lexicon has no version")
        rules = []
        for i, r in enumerate(d.get("rules", [])):
            rid = r.get("id", f"rule-{i}")
            try:
                pattern = re.compile(r["pattern"], re.IGNORECASE)
            except (KeyError, re.error) as exc:
                raise SchemaError(f"lexicon rule {rid}: bad pattern ({exc})") from None
            tid = r.get("technique_id", "")
            if not TECHNIQUE_RE.match(tid):
                raise SchemaError(f"lexicon rule {rid}: bad technique id {tid!r}")
            tactic = catalog_tactic(tid, catalog)
            if r.get("tactic", tactic) != tactic:
                raise SchemaError(f"lexicon rule {rid}: tactic {r['tactic']} disagrees with catalog ({tactic})")
            style = r.get("action_style") or (catalog[tid].style if tid in catalog else "unknown")
            if style not in ACTION_STYLES:
                raise SchemaError(f"lexicon rule {rid}: bad action_style {style!r}")
            cues = OutcomeCues.from_dict(r["outcome_cues"]) if "outcome_cues" in r else None
            rules.append(LexiconRule(rid, pattern, tid, tactic, style, cues))
        try:
            default_cues = OutcomeCues.from_dict(d.get("outcome_cues", {}))
        except re.error as exc:
            raise SchemaError(f"lexicon outcome cue: {exc}") from None
        return cls(tuple(rules), str(d["version"]), default_cues)

    @classmethod
    def load(cls, path: str | Path | None = None, catalog: dict[str, TechniqueInfo] | None = None) -> "Lexicon":
        """Load a lexicon file, or the bundled one when ``path`` is None."""
        if path is None:
            text = resources.files("ambisense.data").joinpath("lexicon.json").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        return cls.from_dict(json.loads(text), catalog)

    def match(self, text: str) -> LexiconRule | None:
        for rule in self.rules:
            if rule.pattern.search(text):
                return rule
        return None

    def outcome(self, rule: LexiconRule, text: str) -> str:
        return (rule.outcome_cues or self.outcome_cues).outcome(text)


# -- targets ------------------------------------------------------------------------

_IPV4 = re.compile(r"(?<![\d.])(\d{1,3}(?:\.\d{1,3}){3})(?::\d{1,5})?(?![\d.]*\d)")
_HOST = re.compile(
    r"(?<![\w.-])([a-z][a-z0-9]*(?:[-.][a-z0-9]+)+|[a-z]+\d+)(?::\d{1,5})?(?![\w-])",
    re.IGNORECASE,
)
_NOT_HOSTS = re.compile(
    r"^(ms\d{2}-\d+|cve-.*|evil-winrm|arp-scan|dirty-\w+|t\d{4}(\.\d{3})?)$"
    r"|\.(txt|exe|sh|py|ps1|dll|conf|cfg|log|zip|php|html?|xml|json|docx?|pdf|kdbx)$",
    re.IGNORECASE,
)


def find_target(text: str) -> str | None:
    """First IPv4 address or hostname in ``text``, lowercased, port stripped."""
    found: list[tuple[int, str]] = []
    for m in _IPV4.finditer(text):
        try:
            ipaddress.IPv4Address(m.group(1))
        except ValueError:
            continue
        found.append((m.start(), m.group(1)))
        break
    for m in _HOST.finditer(text):
        name = m.group(1)
        if _NOT_HOSTS.search(name) or re.fullmatch(r"[\d.]+", name):
            continue
        found.append((m.start(), name.lower()))
        break
    if not found:
        return None
    return min(found)[1]


def extract_targets(records: Iterable[ActionRecord]) -> list[ActionRecord]:
    """Fill in ``target`` from the excerpt for records that have none."""
    out = []
    for rec in records:
        if rec.target is None:
            t = find_target(rec.source_excerpt)
            if t is not None:
                rec = replace(rec, target=t)
        out.append(rec)
    return out


# -- lexicon annotator ----------------------------------------------------------------------


def _excerpt(text: str) -> str:
    return text if len(text) <= EXCERPT_LIMIT else text[: EXCERPT_LIMIT - 3] + "..."


def annotate_note(note: OpNoteEntry, lexicon: Lexicon, confidence: float = RULE_CONFIDENCE) -> ActionRecord | None:
    rule = lexicon.match(note.text)
    if rule is None:
        return None
    return ActionRecord(
        timestamp=note.timestamp,
        participant_id=note.participant_id,
        technique_id=rule.technique_id,
        tactic=rule.tactic,
        target=find_target(note.text),
        action_style=rule.action_style,
        outcome=lexicon.outcome(rule, note.text),
        source_excerpt=_excerpt(note.text),
        confidence=confidence,
    )


def annotate_lexicon(timeline: RawTimeline, lexicon: Lexicon) -> tuple[list[ActionRecord], int]:
    """At most one record per note, in timeline order; returns ``(records, n_skipped)``."""
    records = []
    skipped = 0
    for note in timeline.notes:
        rec = annotate_note(note, lexicon)
        if rec is None:
            skipped += 1
        else:
            records.append(rec)
    return records, skipped


# -- network-event fusion ------------------------------------------------------------------


def fuse_netevents(
    records: Sequence[ActionRecord],
    events: Sequence[NetEvent],
    lexicon: Lexicon,
    window_seconds: float = 60.0,
) -> list[ActionRecord]:
    """Let nearby network events fill a missing target or outcome.

    An event counts as nearby when it lies within ``window_seconds`` of the
    record. A record without a target takes the destination of the
    nearest alert or flow (earliest on ties). A record with an unknown
    outcome reads the outcome cues in the signatures of nearby events to
    its target.
    """
    if not events:
        return list(records)
    win = timedelta(seconds=window_seconds)
    events = sorted(events, key=lambda e: e.timestamp)
    out = []
    for rec in records:
        near = [e for e in events if abs(e.timestamp - rec.timestamp) <= win]
        if rec.target is None:
            cands = [e for e in near if e.dst_ip and e.event_kind in ("alert", "flow")]
            if cands:
                best = min(cands, key=lambda e: (abs(e.timestamp - rec.timestamp), e.timestamp))
                rec = replace(rec, target=best.dst_ip)
        if rec.outcome == "unknown" and rec.target is not None:
            text = " ".join(e.signature or "" for e in near if e.dst_ip == rec.target)
            if text.strip():
                rec = replace(rec, outcome=lexicon.outcome_cues.outcome(text))
        out.append(rec)
    return out


# -- remote annotator --------------------------------------------------------------------------


@dataclass(frozen=True)
class RemoteAnnotatorConfig:
    """Where and how to reach a remote annotation service.

    ``token_env`` names the environment variable holding the bearer token;
    the token itself never lives in configuration.
    """

    endpoint: str
    token_env: str | None = None
    timeout: float = 30.0
    max_in_flight: int = 4
    max_retries: int = 2
    template: str = "attack-mapping-v1"
    batch_size: int = 8
    retry_backoff: float = 0.5

    def validate(self) -> None:
        if not re.match(r"^https?://", self.endpoint or ""):
            raise ValueError(f"remote annotator endpoint must be an http(s) URL, got {self.endpoint!r}")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.token_env is not None and not os.environ.get(self.token_env):
            raise ValueError(f"environment variable {self.token_env} is not set")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RemoteAnnotatorConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown remote annotator settings: {sorted(unknown)}")
        return cls(**d)


class BatchError(RuntimeError):
    pass


def _post(cfg: RemoteAnnotatorConfig, payload: dict[str, Any]) -> dict[str, Any]:
    data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
    headers = {"Content-Type": "application/json; charset=utf-8", "Accept": "application/json"}
    if cfg.token_env:
        headers["Authorization"] = "Bearer " + os.environ[cfg.token_env]
    req = urllib.request.Request(cfg.endpoint, data=data, headers=headers, method="POST")
    with urllib.request.urlopen(req, timeout=cfg.timeout) as resp:
        body = resp.read()
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BatchError(f"response is not JSON: {exc}") from None


def _records_from_response(
    resp: Any, batch: Sequence[tuple[str, OpNoteEntry]], catalog: dict[str, TechniqueInfo]
) -> list[ActionRecord]:
    if not isinstance(resp, dict) or not isinstance(resp.get("annotations"), list):
        raise BatchError("response has no annotations list")
    by_id: dict[str, dict[str, Any]] = {}
    for ann in resp["annotations"]:
        if not isinstance(ann, dict) or "id" not in ann:
            raise BatchError("annotation without id")
        by_id[str(ann["id"])] = ann
    out = []
    for eid, note in batch:
        ann = by_id.get(eid)
        if ann is None:
            continue  # the service found nothing to map, same as a lexicon miss
        try:
            target = ann.get("target")
            rec = ActionRecord(
                timestamp=note.timestamp,
                participant_id=note.participant_id,
                technique_id=ann["technique_id"],
                tactic=ann["tactic"],
                target=None if target is None else str(target).lower(),
                action_style=ann.get("action_style", "unknown"),
                outcome=ann.get("outcome", "unknown"),
                source_excerpt=_excerpt(note.text),
                confidence=float(ann.get("confidence", RULE_CONFIDENCE)),
            )
            validate_record(rec, catalog)
        except (KeyError, TypeError, ValueError) as exc:
            raise BatchError(f"bad annotation for {eid}: {exc}") from None
        out.append(rec)
    return out


def annotate_remote(
    timeline: RawTimeline,
    cfg: RemoteAnnotatorConfig,
    lexicon: Lexicon | None = None,
    catalog: dict[str, TechniqueInfo] | None = None,
) -> tuple[list[ActionRecord], int]:
    """Annotate notes through the remote service; returns ``(records, n_fallback_batches)``.

    At most ``cfg.max_in_flight`` requests are outstanding at once. Results
    are reassembled in timeline order whatever order responses arrive in.
    A batch that still fails after ``cfg.max_retries`` retries is annotated
    by the lexicon with confidence 0.5.
    """
    cfg.validate()
    lexicon = Lexicon.load() if lexicon is None else lexicon
    catalog = load_attack_catalog() if catalog is None else catalog
    notes = timeline.notes
    ids = [f"{timeline.participant_id}:{i}" for i in range(len(notes))]
    batches = [
        list(zip(ids[i : i + cfg.batch_size], notes[i : i + cfg.batch_size]))
        for i in range(0, len(notes), cfg.batch_size)
    ]

    def run(batch):
        payload = {
            "batch": [{"id": eid, "timestamp": format_timestamp(n.timestamp), "text": n.text} for eid, n in batch],
            "template": cfg.template,
        }
        last: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt and cfg.retry_backoff > 0:
                time.sleep(cfg.retry_backoff * 2 ** (attempt - 1))
            try:
                return _records_from_response(_post(cfg, payload), batch, catalog), False
            except (urllib.error.URLError, OSError, BatchError) as exc:
                last = exc
                log.warning("remote annotation attempt %d failed: %s", attempt + 1, exc)
        log.warning("falling back to lexicon for %d notes after: %s", len(batch), last)
        recs = [annotate_note(n, lexicon, FALLBACK_CONFIDENCE) for _, n in batch]
        return [r for r in recs if r is not None], True

    if not batches:
        return [], 0
    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        results = list(pool.map(run, batches))
    records = [r for recs, _ in results for r in recs]
    return records, sum(fell for _, fell in results)
