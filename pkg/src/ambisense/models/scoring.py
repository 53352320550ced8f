from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..records import ActionRecord
from .ambiguity import TraitBelief, TraitObservation, ambiguity_observe, ambiguity_score, apply_hedging, detect_hedging
from .contexts import DecisionContext, EnvCatalog, build_contexts
from .loss import LossBelief, loss_aversion_observe
from .params import ModelParams

MODELS = ("ambiguity", "loss")


@dataclass
class ParticipantScores:
    participant_id: str
    observations: list[TraitObservation]
    ambiguity: TraitBelief | None
    loss: LossBelief | None
    hedging_events: list[int]


def score_contexts(
    contexts: Sequence[DecisionContext],
    participant_id: str,
    params: ModelParams = ModelParams(),
    models: Sequence[str] = MODELS,
) -> ParticipantScores:
    unknown = set(models) - set(MODELS)
    if unknown:
        raise ValueError(f"unknown model(s): {sorted(unknown)}")
    amb = TraitBelief.prior(participant_id, params) if "ambiguity" in models else None
    loss = LossBelief.prior(participant_id, params) if "loss" in models else None
    hedges: list[int] = []
    if amb is not None and params.hedging_evidence > 0:
        chosen_scores = [ambiguity_score(c.chosen, params) for c in contexts]
        hedges = detect_hedging([c.timestamp for c in contexts], chosen_scores, params)
    hedge_at = set(hedges)

    out: list[TraitObservation] = []
    for i, ctx in enumerate(contexts):
        if amb is not None:
            obs, amb = ambiguity_observe(ctx, amb, params)
            out.append(obs)
            if i in hedge_at:
                # applied after the observation is emitted; shows from the next action on
                amb = apply_hedging(amb, params)
        if loss is not None:
            obs, loss = loss_aversion_observe(ctx, loss, params)
            out.append(obs)
    return ParticipantScores(participant_id, out, amb, loss, hedges)


def score_participant(
    records: Sequence[ActionRecord],
    env: EnvCatalog,
    params: ModelParams = ModelParams(),
    models: Sequence[str] = MODELS,
) -> ParticipantScores:
    if not records:
        raise ValueError("no records to score")
    pids = {r.participant_id for r in records}
    if len(pids) != 1:
        raise ValueError(f"records span several participants: {sorted(pids)}")
    ordered = sorted(records, key=lambda r: r.timestamp)
    contexts = build_contexts(ordered, env, params)
    return score_contexts(contexts, ordered[0].participant_id, params, models)
