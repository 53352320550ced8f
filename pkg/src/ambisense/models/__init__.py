from .ambiguity import (
    TraitBelief,
    TraitObservation,
    ambiguity_observe,
    ambiguity_score,
    apply_hedging,
    combined_novelty,
    detect_hedging,
    epistemic_uncertainty,
    novelty_score,
)
from .contexts import DecisionContext, EnvCatalog, TechniqueProfile, build_contexts
from .loss import LossBelief, loss_aversion_observe
from .params import ModelParams
from .scoring import MODELS, ParticipantScores, score_contexts, score_participant
from .utility import (
    UNKNOWN,
    ContractError,
    OptionFeature,
    gamma_choice,
    seu_reference,
    subjective_utility,
    with_reference,
)

__all__ = [
    "MODELS",
    "UNKNOWN",
    "ContractError",
    "DecisionContext",
    "EnvCatalog",
    "LossBelief",
    "ModelParams",
    "OptionFeature",
    "ParticipantScores",
    "TechniqueProfile",
    "TraitBelief",
    "TraitObservation",
    "ambiguity_observe",
    "ambiguity_score",
    "apply_hedging",
    "build_contexts",
    "combined_novelty",
    "detect_hedging",
    "epistemic_uncertainty",
    "gamma_choice",
    "loss_aversion_observe",
    "novelty_score",
    "score_contexts",
    "score_participant",
    "seu_reference",
    "subjective_utility",
    "with_reference",
]
