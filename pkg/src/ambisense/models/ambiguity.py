"""Ambiguity-aversion sensor.

Options are scored for how little the attacker can know about them
(novelty, complexity, spread of the success-rate posterior). A decision
only counts as evidence when a clearly ambiguous option sits next to a
clearly safer one and the situation as a whole is uncertain; choosing the
safer one then moves a Beta belief toward "averse", choosing the ambiguous
one toward "neutral". Evidence is scaled by how much the ambiguous option
was favoured by plain expected utility.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Iterable, Sequence

from ..records import format_timestamp, parse_timestamp
from .params import ModelParams
from .utility import OptionFeature, seu_reference

TRAITS = ("ambiguity_aversion", "loss_aversion")


def novelty_score(n_prior_uses: int, k: float = 0.5) -> float:
    if n_prior_uses < 0:
        raise ValueError("n_prior_uses must be >= 0")
    return math.exp(-k * n_prior_uses)


def combined_novelty(technique_uses: int, target_visits: int, k: float = 0.5) -> float:
    return max(novelty_score(technique_uses, k), novelty_score(target_visits, k))


def epistemic_uncertainty(n_uses: int, n_successes: int) -> float:
    """Variance of the Beta(s+1, n-s+1) success-rate posterior, scaled so n=0 gives 1."""
    if not 0 <= n_successes <= n_uses:
        raise ValueError("need 0 <= n_successes <= n_uses")
    a = n_successes + 1
    b = n_uses - n_successes + 1
    return 12.0 * a * b / ((a + b) ** 2 * (a + b + 1))


def ambiguity_score(option: OptionFeature, params: ModelParams = ModelParams()) -> float:
    """Weighted ambiguity of one option, clamped to [0, 1].

    A documented (known) success probability leaves nothing to learn, so the
    success-history term only applies when ``p_success`` is unknown.
    """
    if option.p_success is None:
        u = epistemic_uncertainty(option.n_uses, option.n_successes)
    else:
        u = 0.0
    a = params.w_novelty * option.novelty + params.w_complexity * option.complexity + params.w_variance * u
    return min(1.0, max(0.0, a))


@dataclass(frozen=True)
class TraitBelief:
    participant_id: str
    trait: str
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.trait not in TRAITS:
            raise ValueError(f"unknown trait {self.trait!r}")

    @property
    def trait_probability(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @classmethod
    def prior(cls, participant_id: str, params: ModelParams = ModelParams()) -> "TraitBelief":
        return cls(participant_id, "ambiguity_aversion", params.alpha0, params.beta0)


@dataclass(frozen=True)
class TraitObservation:
    participant_id: str
    timestamp: datetime
    technique_id: str
    tactic: str
    model: str
    trait_probability: float
    gated: bool
    evidence_strength: float
    seq: int = 0

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "seq": self.seq,
            "timestamp": format_timestamp(self.timestamp),
            "technique_id": self.technique_id,
            "tactic": self.tactic,
            "model": self.model,
            "trait_probability": self.trait_probability,
            "gated": self.gated,
            "evidence_strength": self.evidence_strength,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraitObservation":
        return cls(
            participant_id=str(d["participant_id"]),
            timestamp=parse_timestamp(d["timestamp"]),
            technique_id=d["technique_id"],
            tactic=d["tactic"],
            model=d["model"],
            trait_probability=float(d["trait_probability"]),
            gated=bool(d["gated"]),
            evidence_strength=float(d["evidence_strength"]),
            seq=int(d.get("seq", 0)),
        )


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def ambiguity_observe(ctx, belief: TraitBelief, params: ModelParams = ModelParams()):
    """Score one decision; returns ``(TraitObservation, updated TraitBelief)``.

    ``ctx`` is a :class:`~ambisense.models.contexts.DecisionContext`.
    """
    options = ctx.options
    scores = [ambiguity_score(o, params) for o in options]
    # (score, option_id) gives lexicographic tie-breaking on ids
    order_max = min(range(len(options)), key=lambda i: (-scores[i], options[i].option_id))
    order_min = min(range(len(options)), key=lambda i: (scores[i], options[i].option_id))
    delta = scores[order_max] - scores[order_min]

    def inert() -> tuple[TraitObservation, TraitBelief]:
        return ctx.observation("ambiguity", belief.trait_probability, False, 0.0), belief

    if delta < params.gate_delta or ctx.uncertainty < params.gate_uncertainty:
        return inert()

    o_amb, o_safe = options[order_max], options[order_min]
    diff = seu_reference(o_amb, params.reference_probability) - seu_reference(o_safe, params.reference_probability)
    e = delta * _logistic(params.evidence_slope * diff)
    chosen = ctx.chosen_index
    if chosen == order_min:
        new = replace(belief, alpha=belief.alpha + e)
        strength = e
    elif chosen == order_max:
        new = replace(belief, beta=belief.beta + e)
        strength = -e
    else:
        return ctx.observation("ambiguity", belief.trait_probability, True, 0.0), belief
    return ctx.observation("ambiguity", new.trait_probability, True, strength), new


def detect_hedging(
    timestamps: Sequence[datetime],
    scores: Sequence[float],
    params: ModelParams = ModelParams(),
) -> list[int]:
    """Indices at which a hedging event fires.

    Each position is classified high (``>= hedging_high``), low
    (``<= hedging_low``) or neither. An event fires at position ``i`` when the
    classified actions inside the window ending at ``i`` switch class at
    least twice; at most one event fires per window length.
    """
    if len(timestamps) != len(scores):
        raise ValueError("timestamps and scores must have equal length")
    events: list[int] = []
    window: deque[tuple[float, str]] = deque()
    last_event: float | None = None
    for i, (ts, a) in enumerate(zip(timestamps, scores)):
        t = ts.timestamp()
        if a >= params.hedging_high:
            window.append((t, "high"))
        elif a <= params.hedging_low:
            window.append((t, "low"))
        while window and t - window[0][0] > params.hedging_window:
            window.popleft()
        if last_event is not None and t - last_event <= params.hedging_window:
            continue
        if _alternations(c for _, c in window) >= 2:
            events.append(i)
            last_event = t
            window.clear()
    return events


def _alternations(classes: Iterable[str]) -> int:
    n = 0
    prev = None
    for c in classes:
        if prev is not None and c != prev:
            n += 1
        prev = c
    return n


def apply_hedging(belief: TraitBelief, params: ModelParams = ModelParams()) -> TraitBelief:
    return replace(belief, alpha=belief.alpha + params.hedging_evidence)
