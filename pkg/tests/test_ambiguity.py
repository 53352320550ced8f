import math
from datetime import timedelta

import pytest

from ambisense.models import (
    ModelParams,
    TraitBelief,
    ambiguity_observe,
    ambiguity_score,
    apply_hedging,
    combined_novelty,
    detect_hedging,
    epistemic_uncertainty,
    novelty_score,
)

from conftest import T0, context, option


def test_novelty():
    assert novelty_score(0) == 1.0
    assert novelty_score(2, 0.5) == pytest.approx(math.exp(-1), abs=1e-12)
    assert novelty_score(2, 0.5) == pytest.approx(0.3678794, abs=1e-7)
    vals = [novelty_score(n) for n in range(50)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert combined_novelty(5, 0) == 1.0
    assert combined_novelty(4, 2) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        novelty_score(-1)


def beta_var(a, b):
    return a * b / ((a + b) ** 2 * (a + b + 1))


@pytest.mark.parametrize("n,s", [(0, 0), (2, 1), (10, 5), (7, 0), (30, 29)])
def test_epistemic_uncertainty_matches_beta_variance(n, s):
    assert epistemic_uncertainty(n, s) == pytest.approx(12 * beta_var(s + 1, n - s + 1), abs=1e-15)


def test_epistemic_uncertainty_examples():
    assert epistemic_uncertainty(0, 0) == pytest.approx(1.0, abs=1e-12)
    assert epistemic_uncertainty(2, 1) == pytest.approx(0.6, abs=1e-12)
    assert epistemic_uncertainty(10, 5) == pytest.approx(0.2307692, abs=1e-7)
    with pytest.raises(ValueError):
        epistemic_uncertainty(2, 3)


def test_ambiguity_score_worked_example():
    o = option("a", p_success=None, novelty=1.0, complexity=0.5)
    assert ambiguity_score(o) == pytest.approx(0.85, abs=1e-12)


def test_ambiguity_score_zero_and_known_probability():
    assert ambiguity_score(option("a", p_success=0.5, novelty=0.0, complexity=0.0)) == 0.0
    # a documented probability leaves no success-rate uncertainty
    assert ambiguity_score(option("a", p_success=0.5, novelty=1.0, complexity=0.5)) == pytest.approx(0.55)


def test_single_option_context_is_inert():
    ctx = context([option("0", chosen=True)])
    belief = TraitBelief.prior("p1")
    obs, new = ambiguity_observe(ctx, belief)
    assert not obs.gated and obs.evidence_strength == 0.0 and new == belief
    assert obs.trait_probability == 0.25


def gated_pair(chosen_safe):
    # ambiguity 0.85 vs 0.35 (delta 0.5), equal reference utilities
    amb = option("amb", gain=1, loss=1, p_success=None, p_detect=0.5, novelty=1.0, complexity=0.5,
                 chosen=not chosen_safe)
    safe = option("safe", gain=1, loss=1, p_success=0.5, p_detect=0.5, novelty=0.5, complexity=0.5,
                  chosen=chosen_safe)
    return context([amb, safe], uncertainty=0.8)


def test_observe_worked_example():
    ctx = gated_pair(chosen_safe=True)
    assert ambiguity_score(ctx.options[0]) - ambiguity_score(ctx.options[1]) == pytest.approx(0.5)
    obs, new = ambiguity_observe(ctx, TraitBelief.prior("p1"))
    assert new.alpha == pytest.approx(1.25, abs=1e-12) and new.beta == 3.0
    assert obs.trait_probability == pytest.approx(1.25 / 4.25, abs=1e-12)
    assert obs.gated and obs.evidence_strength == pytest.approx(0.25)


def test_repeated_ambiguous_choices_drive_probability_down():
    belief = TraitBelief.prior("p1")
    for _ in range(20):
        obs, belief = ambiguity_observe(gated_pair(chosen_safe=False), belief)
    # independent iteration of the rule: beta grows by 0.25 per step
    assert belief.beta == pytest.approx(3 + 20 * 0.25)
    assert obs.trait_probability == pytest.approx(1 / (1 + 8), abs=1e-12)
    assert obs.trait_probability < 0.2


def test_gate_on_low_uncertainty():
    ctx = gated_pair(True)
    ctx = context(ctx.options, uncertainty=0.4)
    obs, new = ambiguity_observe(ctx, TraitBelief.prior("p1"))
    assert not obs.gated and new == TraitBelief.prior("p1")


def test_evidence_scaled_by_seu_gap():
    # the ambiguous option pays more under the neutral benchmark, so passing it up says more
    amb = option("amb", gain=3, loss=1, p_success=None, p_detect=0.2, novelty=1.0, complexity=0.5)
    safe = option("safe", gain=1, loss=1, p_success=0.5, p_detect=0.2, novelty=0.5, complexity=0.5, chosen=True)
    obs, _ = ambiguity_observe(context([amb, safe]), TraitBelief.prior("p1"))
    diff = (0.5 * 3 - 0.2) - (0.5 - 0.2)
    assert obs.evidence_strength == pytest.approx(0.5 / (1 + math.exp(-2 * diff)))


def test_other_option_chosen_is_gated_but_no_evidence():
    amb = option("amb", p_success=None, novelty=1.0, complexity=0.5)
    mid = option("mid", p_success=0.5, novelty=0.8, complexity=0.5, chosen=True)
    safe = option("safe", p_success=0.5, novelty=0.5, complexity=0.5)
    obs, new = ambiguity_observe(context([amb, mid, safe]), TraitBelief.prior("p1"))
    assert obs.gated and obs.evidence_strength == 0.0 and new == TraitBelief.prior("p1")


def test_ties_break_on_option_id():
    a = option("b-first", p_success=0.5, novelty=0.0, complexity=0.0, chosen=True)
    b = option("a-first", p_success=0.5, novelty=0.0, complexity=0.0)
    c = option("z-amb", p_success=None, novelty=1.0, complexity=0.5)
    obs, _ = ambiguity_observe(context([a, b, c]), TraitBelief.prior("p1"))
    # the safe tie goes to "a-first", so choosing "b-first" is not the safe option
    assert obs.evidence_strength == 0.0


def test_belief_validation():
    with pytest.raises(ValueError):
        TraitBelief("p", "ambiguity_aversion", 0.0, 1.0)
    with pytest.raises(ValueError):
        TraitBelief("p", "sunk_cost", 1.0, 1.0)


def ts(*seconds):
    return [T0 + timedelta(seconds=s) for s in seconds]


def test_hedging_safe_amb_safe():
    assert detect_hedging(ts(0, 100, 200), [0.1, 0.9, 0.1]) == [2]


def test_hedging_needs_two_alternations():
    assert detect_hedging(ts(0, 100), [0.1, 0.9]) == []
    assert detect_hedging(ts(0, 100, 200), [0.1, 0.2, 0.25]) == []


def test_hedging_respects_window():
    assert detect_hedging(ts(0, 400, 800), [0.1, 0.9, 0.1]) == []


def test_hedging_middle_scores_are_ignored():
    assert detect_hedging(ts(0, 50, 100, 150), [0.1, 0.5, 0.9, 0.2]) == [3]


def test_hedging_at_most_once_per_window():
    events = detect_hedging(ts(0, 60, 120, 180, 240, 300), [0.1, 0.9, 0.1, 0.9, 0.1, 0.9])
    assert events == [2]
    events = detect_hedging(ts(0, 60, 120, 900, 960, 1020), [0.1, 0.9, 0.1, 0.9, 0.1, 0.9])
    assert events == [2, 5]


def test_apply_hedging():
    b = apply_hedging(TraitBelief.prior("p"), ModelParams())
    assert b.alpha == pytest.approx(1.15) and b.beta == 3.0
