"""Loss-aversion sensor: grid posterior over the loss coefficient.

Each decision between an aggressive and a stealthy option is a logistic
choice whose log-odds depend on the loss coefficient; multiplying those
likelihoods over a fixed grid gives an exact discrete posterior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ModelParams
from .utility import gamma_choice, subjective_utility, with_reference


@dataclass(frozen=True, eq=False)
class LossBelief:
    participant_id: str
    grid: np.ndarray
    weights: np.ndarray
    lambda_threshold: float = 1.0

    @classmethod
    def prior(cls, participant_id: str, params: ModelParams = ModelParams()) -> "LossBelief":
        grid = np.asarray(params.lambda_grid, dtype=float)
        w = np.full(grid.shape, 1.0 / grid.size)
        return cls(participant_id, grid, w, params.lambda_threshold)

    @property
    def trait_probability(self) -> float:
        return float(self.weights[self.grid > self.lambda_threshold].sum())

    @property
    def posterior_mean(self) -> float:
        return float(self.weights @ self.grid)


def choice_likelihood(ctx, params: ModelParams) -> np.ndarray | None:
    """Likelihood of the observed style choice at every grid point, or None if not informative.

    The style decision is read on the chosen target: when that target offers
    both styles the representatives come from its options only, otherwise
    from the whole context.
    """
    chosen = ctx.options[ctx.chosen_index]
    if chosen.style not in ("aggressive", "stealthy"):
        return None
    pool = [o for o in ctx.options if o.target == chosen.target]
    if not {"aggressive", "stealthy"} <= {o.style for o in pool}:
        pool = list(ctx.options)
    options = [with_reference(o, params.reference_probability) for o in pool]
    aggressive = [o for o in options if o.style == "aggressive"]
    stealthy = [o for o in options if o.style == "stealthy"]
    if not aggressive or not stealthy:
        return None
    lik = np.empty(len(params.lambda_grid))
    for j, lam in enumerate(params.lambda_grid):
        eps_a = max(subjective_utility(o, lam) for o in aggressive)
        eps_s = max(subjective_utility(o, lam) for o in stealthy)
        g = gamma_choice(eps_a, eps_s, params.mu)
        lik[j] = g if chosen.style == "aggressive" else 1.0 - g
    return lik


def loss_aversion_observe(ctx, belief: LossBelief, params: ModelParams = ModelParams()):
    """Score one decision; returns ``(TraitObservation, updated LossBelief)``.

    Contexts lacking either style, or whose chosen option has no style,
    produce an inert observation and leave the belief alone.
    """
    lik = choice_likelihood(ctx, params)
    if lik is None:
        return ctx.observation("loss", belief.trait_probability, False, 0.0), belief
    post = belief.weights * lik
    total = post.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise FloatingPointError("all grid likelihoods vanished; posterior is undefined")
    post = post / total
    new = LossBelief(belief.participant_id, belief.grid, post, belief.lambda_threshold)
    # signed shift of mass above the threshold: + toward averse
    strength = float(np.clip(new.trait_probability - belief.trait_probability, -1.0, 1.0))
    return ctx.observation("loss", new.trait_probability, True, strength), new
