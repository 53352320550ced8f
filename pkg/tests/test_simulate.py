import numpy as np
import pytest

from ambisense.records import validate_record, load_attack_catalog
from ambisense.simulate import (
    SimAgentParams,
    SimOption,
    agent_utility,
    build_environment,
    generate_cohort,
    make_rng,
    run_episode,
    softmax_choice,
)


def test_rng_is_keyed_by_seed_and_stream():
    a = make_rng(5, 1).random(4)
    assert np.array_equal(a, make_rng(5, 1).random(4))
    assert not np.array_equal(a, make_rng(5, 2).random(4))
    assert not np.array_equal(a, make_rng(6, 1).random(4))
    with pytest.raises(ValueError):
        make_rng(-1, 0)


def test_alpha_maxmin_utility():
    o = SimOption("x", gain=2.0, loss=1.0, p_detect=0.2, p_lo=0.2, p_hi=0.8)
    lo, hi = 0.2 * 2 - 0.2, 0.8 * 2 - 0.2
    assert agent_utility(o, SimAgentParams(theta_true=1.0)) == pytest.approx(lo)
    assert agent_utility(o, SimAgentParams(theta_true=0.0)) == pytest.approx(hi)
    assert agent_utility(o, SimAgentParams(theta_true=0.25)) == pytest.approx(0.25 * lo + 0.75 * hi)
    known = SimOption("k", gain=2.0, loss=1.0, p_detect=0.2, p_success=0.5)
    assert agent_utility(known, SimAgentParams(lambda_true=3.0)) == pytest.approx(1.0 - 0.6)


def test_softmax_limit_picks_dominant_option():
    idx, p = softmax_choice([0.0, 1.0, 0.2], mu=1e4, u=0.999)
    assert idx == 1 and p[1] == pytest.approx(1.0)


def test_softmax_inverts_cdf():
    idx, p = softmax_choice([0.0, 0.0], mu=1.0, u=0.49)
    assert idx == 0 and np.allclose(p, 0.5)
    assert softmax_choice([0.0, 0.0], 1.0, 0.51)[0] == 1


def test_episode_reproducible_and_valid():
    env = build_environment(seed=3)
    params = SimAgentParams(1.5, 0.7, 5.0, seed=11)
    r1, s1 = run_episode(env, params, 30)
    r2, s2 = run_episode(env, params, 30)
    assert r1 == r2 and s1 == s2
    catalog = load_attack_catalog()
    for r in r1:
        validate_record(r, catalog)
    assert all(a.timestamp < b.timestamp for a, b in zip(r1, r1[1:]))
    assert len(s1["steps"]) == 30
    for step in s1["steps"]:
        assert abs(sum(step["probabilities"]) - 1) < 1e-9


def test_ambiguity_averse_agents_pick_custom_hosts_less():
    env = build_environment(seed=0)
    for seed in range(20):
        rates = []
        for theta in (0.99, 0.01):
            _, side = run_episode(env, SimAgentParams(1.0, theta, 5.0, seed=seed), 200)
            rates.append(np.mean([s["chosen_kind"] == "custom" for s in side["steps"]]))
        assert rates[0] < rates[1]


def test_cohort_layout_and_ground_truth(tmp_path):
    c = generate_cohort({"seed": 4, "n_steps": 10, "groups": [{"n": 2, "theta": 0.9, "lambda": 1.0, "mu": 5},
                                                              {"n": 1, "theta": {"uniform": [0, 0.2]}, "lambda": 2.0}]})
    assert list(c.actions) == ["agent-000", "agent-001", "agent-002"]
    agents = c.ground_truth["agents"]
    assert [a["group"] for a in agents] == [0, 0, 1]
    assert 0 <= agents[2]["theta_true"] <= 0.2
    paths = c.write(tmp_path)
    assert (tmp_path / "actions" / "agent-001.jsonl").is_file()
    assert (tmp_path / "env_catalog.json") in paths
    c2 = generate_cohort({"seed": 4, "n_steps": 10, "groups": [{"n": 2, "theta": 0.9, "lambda": 1.0, "mu": 5},
                                                               {"n": 1, "theta": {"uniform": [0, 0.2]}, "lambda": 2.0}]})
    assert c2.actions == c.actions


def test_catalog_hides_custom_probabilities():
    env = build_environment(seed=1)
    cat = env.catalog()
    for h in env.hosts:
        t = cat.targets[h.host_id]
        assert (t.p_success is None) == (h.service_kind == "custom")
