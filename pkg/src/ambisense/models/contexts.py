"""Reconstruct decision contexts from an action log and an environment catalog.

Logs only show what the attacker did. The catalog says what else was on
the table: for each recorded action we rebuild the chosen option, the
same-tactic technique(s) of the opposite style on the same target, and the
same techniques on the least-visited target of the opposite knowledge class
(documented vs. custom service). Per-participant running profiles supply
novelty and success history; they are updated only after a record has been
turned into a context.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Sequence

from ..records import ActionRecord, format_timestamp
from .ambiguity import TraitObservation, ambiguity_score, combined_novelty
from .params import ModelParams
from .utility import OptionFeature


@dataclass(frozen=True)
class TechniqueEntry:
    technique_id: str
    tactic: str
    complexity: float
    style: str


@dataclass(frozen=True)
class TargetEntry:
    target_id: str
    service_kind: str
    value: float
    loss: float
    p_success: float | None
    p_detect: float
    complexity: float

    @property
    def documented(self) -> bool:
        return self.p_success is not None


@dataclass(frozen=True)
class StyleEntry:
    gain_mult: float = 1.0
    detect_add: float = 0.0


@dataclass
class EnvCatalog:
    """What the inference side knows about the environment.

    ``fallback`` holds two option templates (keys ``safe`` and
    ``ambiguous``) used when a technique is missing from the catalog;
    ``default_target`` describes targets the catalog does not list.
    """

    techniques: dict[str, TechniqueEntry]
    targets: dict[str, TargetEntry]
    styles: dict[str, StyleEntry]
    fallback: dict[str, dict[str, Any]]
    default_target: TargetEntry
    version: str = "1"

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EnvCatalog":
        techniques = {
            t["technique_id"]: TechniqueEntry(t["technique_id"], t["tactic"], float(t["complexity"]), t["style"])
            for t in d["techniques"]
        }
        targets = {t["target_id"]: _target(t) for t in d["targets"]}
        styles = {k: StyleEntry(**v) for k, v in d.get("styles", {}).items()}
        for style in ("aggressive", "stealthy", "unknown"):
            styles.setdefault(style, StyleEntry())
        default = d.get("default_target") or {
            "target_id": "unknown",
            "service_kind": "custom",
            "value": 1.0,
            "loss": 1.0,
            "p_success": None,
            "p_detect": 0.2,
            "complexity": 0.5,
        }
        fallback = d.get("fallback") or {
            "safe": {"gain": 1.0, "loss": 1.0, "p_success": 0.7, "p_detect": 0.1, "complexity": 0.1, "style": "stealthy"},
            "ambiguous": {"gain": 2.0, "loss": 1.0, "p_success": None, "p_detect": None, "complexity": 0.9, "style": "aggressive"},
        }
        return cls(techniques, targets, styles, fallback, _target(default), str(d.get("version", "1")))

    @classmethod
    def load(cls, path: str | Path) -> "EnvCatalog":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "techniques": [vars(t) for t in self.techniques.values()],
            "targets": [vars(t) for t in self.targets.values()],
            "styles": {k: vars(v) for k, v in self.styles.items()},
            "fallback": self.fallback,
            "default_target": vars(self.default_target),
        }

    def target(self, target_id: str | None) -> TargetEntry:
        if target_id is not None and target_id in self.targets:
            return self.targets[target_id]
        return self.default_target


def _target(t: dict[str, Any]) -> TargetEntry:
    p = t.get("p_success")
    return TargetEntry(
        target_id=t["target_id"],
        service_kind=t.get("service_kind", "documented" if p is not None else "custom"),
        value=float(t["value"]),
        loss=float(t["loss"]),
        p_success=None if p is None else float(p),
        p_detect=float(t["p_detect"]),
        complexity=float(t.get("complexity", 0.5)),
    )


@dataclass
class TechniqueProfile:
    technique_id: str
    complexity: float = 0.5
    n_uses: int = 0
    n_successes: int = 0
    n_trials: int = 0  # uses with a known outcome; the success history


@dataclass(frozen=True)
class DecisionContext:
    participant_id: str
    timestamp: datetime
    options: tuple[OptionFeature, ...]
    uncertainty: float
    technique_id: str = ""
    tactic: str = "Unknown"
    seq: int = 0

    def __post_init__(self):
        if not self.options:
            raise ValueError("a decision context needs at least one option")
        if sum(o.is_chosen for o in self.options) != 1:
            raise ValueError("exactly one option must be chosen")
        if not 0.0 <= self.uncertainty <= 1.0:
            raise ValueError("context uncertainty must lie in [0, 1]")

    @property
    def chosen_index(self) -> int:
        return next(i for i, o in enumerate(self.options) if o.is_chosen)

    @property
    def chosen(self) -> OptionFeature:
        return self.options[self.chosen_index]

    def observation(self, model: str, p: float, gated: bool, strength: float) -> TraitObservation:
        return TraitObservation(
            participant_id=self.participant_id,
            timestamp=self.timestamp,
            technique_id=self.technique_id,
            tactic=self.tactic,
            model=model,
            trait_probability=p,
            gated=gated,
            evidence_strength=strength,
            seq=self.seq,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "participant_id": self.participant_id,
            "seq": self.seq,
            "timestamp": format_timestamp(self.timestamp),
            "technique_id": self.technique_id,
            "tactic": self.tactic,
            "uncertainty": self.uncertainty,
            "options": [vars(o) for o in self.options],
        }


@dataclass
class _History:
    profiles: dict[str, TechniqueProfile] = field(default_factory=dict)
    visits: dict[str, int] = field(default_factory=lambda: defaultdict(int))

    def profile(self, technique_id: str, complexity: float) -> TechniqueProfile:
        if technique_id not in self.profiles:
            self.profiles[technique_id] = TechniqueProfile(technique_id, complexity)
        return self.profiles[technique_id]


def build_contexts(
    records: Sequence[ActionRecord],
    env: EnvCatalog,
    params: ModelParams = ModelParams(),
) -> list[DecisionContext]:
    """One context per record, for a single participant's time-sorted records."""
    hist = _History()
    contexts = []
    for seq, rec in enumerate(records):
        contexts.append(_context_for(rec, seq, env, hist, params))
        # score-then-update: a record never informs its own context
        tech = env.techniques.get(rec.technique_id)
        prof = hist.profile(rec.technique_id, tech.complexity if tech else 0.5)
        prof.n_uses += 1
        if rec.outcome != "unknown":
            prof.n_trials += 1
            prof.n_successes += rec.outcome == "success"
        hist.visits[_target_key(rec.target)] += 1
    return contexts


def _target_key(target: str | None) -> str:
    return target if target is not None else "unknown"


def _option(
    option_id: str,
    technique: TechniqueEntry,
    target: TargetEntry,
    style: str,
    env: EnvCatalog,
    hist: _History,
    params: ModelParams,
    chosen: bool,
) -> OptionFeature:
    st = env.styles.get(style, StyleEntry())
    prof = hist.profiles.get(technique.technique_id)
    uses = prof.n_uses if prof else 0
    return OptionFeature(
        option_id=option_id,
        gain=target.value * st.gain_mult,
        loss=target.loss,
        p_success=target.p_success,
        p_detect=min(1.0, max(0.0, target.p_detect + st.detect_add)),
        novelty=combined_novelty(uses, hist.visits.get(target.target_id, 0), params.novelty_decay),
        complexity=max(technique.complexity, target.complexity),
        n_uses=prof.n_trials if prof else 0,
        n_successes=prof.n_successes if prof else 0,
        is_chosen=chosen,
        style=style,
        technique_id=technique.technique_id,
        target=target.target_id,
    )


def _context_for(rec: ActionRecord, seq: int, env: EnvCatalog, hist: _History, params: ModelParams) -> DecisionContext:
    target = env.target(rec.target)
    if rec.target is not None and rec.target not in env.targets:
        target = TargetEntry(rec.target, *[getattr(env.default_target, f) for f in (
            "service_kind", "value", "loss", "p_success", "p_detect", "complexity")])
    tech = env.techniques.get(rec.technique_id)
    if tech is None:
        options = _fallback_options(rec, target, env, hist, params)
    else:
        style = rec.action_style if rec.action_style != "unknown" else tech.style
        siblings = sorted(
            (t for t in env.techniques.values()
             if t.tactic == tech.tactic and t.style != style and t.technique_id != tech.technique_id),
            key=lambda t: t.technique_id,
        )
        alt = _alternative_target(target, env, hist)
        # chosen option id sorts first so it wins ties against same-target siblings
        options = [_option(f"0:{target.target_id}:{tech.technique_id}", tech, target, style, env, hist, params, True)]
        for t in siblings:
            options.append(_option(f"1:{target.target_id}:{t.technique_id}", t, target, t.style, env, hist, params, False))
        if alt is not None:
            options.append(_option(f"2:{alt.target_id}:{tech.technique_id}", tech, alt, style, env, hist, params, False))
            for t in siblings:
                options.append(_option(f"3:{alt.target_id}:{t.technique_id}", t, alt, t.style, env, hist, params, False))
    u = sum(ambiguity_score(o, params) for o in options) / len(options)
    return DecisionContext(
        participant_id=rec.participant_id,
        timestamp=rec.timestamp,
        options=tuple(options),
        uncertainty=min(1.0, max(0.0, u)),
        technique_id=rec.technique_id,
        tactic=rec.tactic,
        seq=seq,
    )


def _alternative_target(target: TargetEntry, env: EnvCatalog, hist: _History) -> TargetEntry | None:
    """Least-visited catalog target of the opposite knowledge class (ties: lowest id)."""
    pool = [t for t in env.targets.values() if t.documented != target.documented and t.target_id != target.target_id]
    if not pool:
        return None
    return min(pool, key=lambda t: (hist.visits.get(t.target_id, 0), t.target_id))


def _fallback_options(rec, target, env, hist, params) -> list[OptionFeature]:
    style = rec.action_style if rec.action_style != "unknown" else "unknown"
    pseudo = TechniqueEntry(rec.technique_id, rec.tactic, 0.5, style)
    options = [_option(f"0:{target.target_id}:{rec.technique_id}", pseudo, target, style, env, hist, params, True)]
    for i, key in enumerate(("safe", "ambiguous"), 1):
        tpl = env.fallback[key]
        options.append(OptionFeature(
            option_id=f"{i}:fallback:{key}",
            gain=float(tpl["gain"]),
            loss=float(tpl["loss"]),
            p_success=tpl.get("p_success"),
            p_detect=tpl.get("p_detect"),
            novelty=float(tpl.get("novelty", 1.0 if key == "ambiguous" else 0.0)),
            complexity=float(tpl.get("complexity", 0.5)),
            style=tpl.get("style", "unknown"),
            technique_id="fallback",
            target=None,
        ))
    return options
