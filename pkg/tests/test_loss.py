import math

import numpy as np
import pytest

from ambisense.models import LossBelief, ModelParams, loss_aversion_observe
from ambisense.models.loss import choice_likelihood

from conftest import context, option


def aggressive(chosen=False, target="h1", gain=2.0, p_detect=0.45):
    return option(f"a-{target}", gain=gain, loss=1.0, p_success=0.6, p_detect=p_detect, style="aggressive",
                  chosen=chosen, target=target)


def stealthy(chosen=False, target="h1", gain=1.0, p_detect=0.05):
    return option(f"s-{target}", gain=gain, loss=1.0, p_success=0.6, p_detect=p_detect, style="stealthy",
                  chosen=chosen, target=target)


def oracle_posterior(choices, mu=1.0):
    """Independent grid posterior for aggressive(G=2,pd=.45) vs stealthy(G=1,pd=.05)."""
    grid = [0.5 + 0.125 * i for i in range(21)]
    post = []
    for lam in grid:
        ea = 0.6 * 2.0 - lam * 0.45
        es = 0.6 * 1.0 - lam * 0.05
        g = 1 / (1 + math.exp(-mu * (ea - es)))
        w = 1.0 / 21
        for c in choices:
            w *= g if c == "a" else 1 - g
        post.append(w)
    z = sum(post)
    return grid, [w / z for w in post]


def run(choices, params=ModelParams()):
    belief = LossBelief.prior("p1", params)
    for i, c in enumerate(choices):
        ctx = context([aggressive(c == "a"), stealthy(c == "s")], seq=i)
        obs, belief = loss_aversion_observe(ctx, belief, params)
    return obs, belief


def test_prior_mass_above_one():
    b = LossBelief.prior("p")
    assert len(b.grid) == 21 and b.grid[0] == 0.5 and b.grid[-1] == 3.0
    assert b.trait_probability == pytest.approx(16 / 21)


def test_single_stealthy_choice_matches_oracle():
    obs, belief = run("s")
    grid, post = oracle_posterior("s")
    np.testing.assert_allclose(belief.weights, post, atol=1e-12)
    assert obs.trait_probability == pytest.approx(sum(w for l, w in zip(grid, post) if l > 1), abs=1e-12)
    # aggression pays at lambda=1 here, so a stealthy pick raises the averse mass
    assert obs.trait_probability > 16 / 21
    assert obs.evidence_strength > 0


def test_sequence_matches_oracle_and_is_exchangeable():
    seq = "ssasassaas"
    _, b1 = run(seq)
    _, b2 = run("".join(sorted(seq)))
    grid, post = oracle_posterior(seq)
    np.testing.assert_allclose(b1.weights, post, atol=1e-12)
    np.testing.assert_allclose(b1.weights, b2.weights, atol=1e-12)


def test_identical_styles_leave_posterior_unchanged():
    a = option("a", gain=1, loss=1, p_success=0.5, p_detect=0.2, style="aggressive", chosen=True)
    s = option("s", gain=1, loss=1, p_success=0.5, p_detect=0.2, style="stealthy")
    obs, belief = loss_aversion_observe(context([a, s]), LossBelief.prior("p"))
    np.testing.assert_allclose(belief.weights, LossBelief.prior("p").weights, atol=1e-15)
    assert obs.evidence_strength == pytest.approx(0.0, abs=1e-15)


def test_missing_style_is_inert():
    a = option("a", p_success=0.5, style="aggressive", chosen=True)
    b = option("b", p_success=0.4, style="aggressive")
    prior = LossBelief.prior("p")
    obs, belief = loss_aversion_observe(context([a, b]), prior)
    assert not obs.gated and belief is prior and obs.trait_probability == prior.trait_probability


def test_unknown_probabilities_use_reference():
    a = option("a", gain=2, loss=1, p_success=None, p_detect=None, style="aggressive", chosen=True)
    s = option("s", gain=1, loss=1, p_success=0.5, p_detect=0.1, style="stealthy")
    lik = choice_likelihood(context([a, s]), ModelParams())
    lam = np.array(ModelParams().lambda_grid)
    expected = 1 / (1 + np.exp(-((1.0 - lam * 0.5) - (0.5 - lam * 0.1))))
    np.testing.assert_allclose(lik, expected, atol=1e-12)


def test_best_representative_per_style_on_chosen_target():
    # a far better aggressive option on another host does not enter the comparison
    opts = [aggressive(True, "h1"), stealthy(False, "h1"), aggressive(False, "h2", gain=50.0)]
    lik = choice_likelihood(context(opts), ModelParams())
    lik_local = choice_likelihood(context(opts[:2]), ModelParams())
    np.testing.assert_allclose(lik, lik_local)


def test_many_stealthy_choices_give_high_probability():
    obs, _ = run("s" * 50, ModelParams(mu=5.0))
    assert obs.trait_probability >= 0.9


def test_vanishing_likelihood_raises():
    params = ModelParams(mu=1e6)
    belief = LossBelief("p", np.array(params.lambda_grid), np.eye(21)[20], 1.0)
    # all prior mass on lambda=3 and an aggressive pick that is infinitely unlikely there
    ctx = context([option("a", gain=0.0, loss=10.0, p_success=0.5, p_detect=1.0, style="aggressive", chosen=True),
                   option("s", gain=10.0, loss=0.0, p_success=1.0, p_detect=0.0, style="stealthy")])
    with pytest.raises(FloatingPointError):
        loss_aversion_observe(ctx, belief, params)
