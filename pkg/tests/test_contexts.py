import json

import pytest

from ambisense.models import EnvCatalog, ModelParams, build_contexts, score_participant
from ambisense.records import dumps_canonical

from conftest import record

CATALOG = {
    "version": "test",
    "techniques": [
        {"technique_id": "T1046", "tactic": "Discovery", "complexity": 0.3, "style": "aggressive"},
        {"technique_id": "T1018", "tactic": "Discovery", "complexity": 0.3, "style": "stealthy"},
        {"technique_id": "T1110", "tactic": "CredentialAccess", "complexity": 0.2, "style": "aggressive"},
    ],
    "targets": [
        {"target_id": "10.0.1.10", "value": 1.0, "loss": 1.0, "p_success": 0.7, "p_detect": 0.1, "complexity": 0.1},
        {"target_id": "10.0.1.11", "value": 1.2, "loss": 1.5, "p_success": 0.6, "p_detect": 0.2, "complexity": 0.2},
        {"target_id": "10.0.1.20", "value": 2.5, "loss": 1.0, "p_success": None, "p_detect": 0.2, "complexity": 0.9},
        {"target_id": "10.0.1.21", "value": 2.0, "loss": 1.0, "p_success": None, "p_detect": 0.1, "complexity": 0.8},
    ],
    "styles": {"aggressive": {"gain_mult": 1.0, "detect_add": 0.25}},
}


@pytest.fixture
def env():
    return EnvCatalog.from_dict(CATALOG)


def test_option_set_layout(env):
    (ctx,) = build_contexts([record()], env)
    ids = [o.option_id for o in ctx.options]
    assert ids == ["0:10.0.1.10:T1046", "1:10.0.1.10:T1018", "2:10.0.1.20:T1046", "3:10.0.1.20:T1018"]
    chosen = ctx.chosen
    assert chosen.is_chosen and chosen.style == "aggressive" and chosen.p_detect == pytest.approx(0.35)
    assert ctx.options[2].p_success is None  # the alternative is from the other knowledge class
    assert 0 <= ctx.uncertainty <= 1


def test_first_action_has_full_technique_novelty(env):
    (ctx,) = build_contexts([record()], env)
    assert all(o.novelty == 1.0 for o in ctx.options)


def test_score_then_update_bookkeeping(env):
    recs = [record(outcome="success"), record(minutes=5, outcome="failure"), record(minutes=10)]
    ctxs = build_contexts(recs, env)
    assert (ctxs[0].chosen.n_uses, ctxs[0].chosen.n_successes) == (0, 0)
    assert (ctxs[1].chosen.n_uses, ctxs[1].chosen.n_successes) == (1, 1)
    assert (ctxs[2].chosen.n_uses, ctxs[2].chosen.n_successes) == (2, 1)
    assert ctxs[1].chosen.novelty == pytest.approx(0.6065306597, abs=1e-9)


def test_unknown_outcome_counts_as_use_not_trial(env):
    ctxs = build_contexts([record(outcome="unknown"), record(minutes=1)], env)
    assert ctxs[1].chosen.n_uses == 0
    assert ctxs[1].chosen.novelty < 1.0


def test_alternative_target_rotates_to_least_visited(env):
    recs = [record(target="10.0.1.20"), record(minutes=1, target="10.0.1.10")]
    ctxs = build_contexts(recs, env)
    assert ctxs[0].options[2].target == "10.0.1.10"
    assert ctxs[1].options[2].target == "10.0.1.21"


def test_unknown_technique_uses_fallback_pair(env):
    (ctx,) = build_contexts([record(tid="T1486", tactic="Impact")], env)
    assert [o.option_id for o in ctx.options] == ["0:10.0.1.10:T1486", "1:fallback:safe", "2:fallback:ambiguous"]
    assert ctx.options[2].p_success is None


def test_unknown_target_uses_default(env):
    (ctx,) = build_contexts([record(target="web-01")], env)
    assert ctx.chosen.target == "web-01" and ctx.chosen.p_success is None


def test_context_stream_is_deterministic(env):
    recs = [record(minutes=i, target=t, tid=tid, style=s) for i, (t, tid, s) in enumerate([
        ("10.0.1.10", "T1046", "aggressive"), ("10.0.1.20", "T1018", "stealthy"),
        ("10.0.1.11", "T1110", "aggressive"), ("10.0.1.21", "T1046", "aggressive"),
        ("10.0.1.10", "T1018", "stealthy")])]
    a = "\n".join(dumps_canonical(c.to_dict()) for c in build_contexts(recs, env))
    b = "\n".join(dumps_canonical(c.to_dict()) for c in build_contexts(recs, EnvCatalog.from_dict(json.loads(json.dumps(CATALOG)))))
    assert a == b


def test_score_participant_model_selection(env):
    recs = [record(minutes=i) for i in range(4)]
    only = score_participant(recs, env, ModelParams(), ("ambiguity",))
    assert only.loss is None and {o.model for o in only.observations} == {"ambiguity"}
    both = score_participant(recs, env)
    assert len(both.observations) == 8
    with pytest.raises(ValueError):
        score_participant(recs, env, ModelParams(), ("sunk_cost",))


def test_score_participant_rejects_mixed_participants(env):
    with pytest.raises(ValueError):
        score_participant([record(pid="a"), record(pid="b")], env)


def test_beliefs_never_decrease(env):
    recs = [record(minutes=3 * i, target=t) for i, t in enumerate(["10.0.1.10", "10.0.1.20"] * 6)]
    scores = score_participant(recs, env)
    amb = [o for o in scores.observations if o.model == "ambiguity"]
    assert all(0 < o.trait_probability < 1 for o in amb)
    assert scores.ambiguity.alpha >= 1.0 and scores.ambiguity.beta >= 3.0
