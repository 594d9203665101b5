import math

import pytest

import polab


def test_group_relative_advantages_for_evenly_spaced_rewards():
    adv = polab.group_relative_advantages([2.0, 4.0, 6.0, 8.0])
    expected = [-1.3416, -0.4472, 0.4472, 1.3416]
    assert all(abs(a - e) < 1e-3 for a, e in zip(adv, expected))


def test_gae_with_lambda_zero_is_td_error():
    rewards, values = [0.0, 0.0, 1.0], [0.2, 0.5, 0.7, 0.0]
    assert polab.gae(rewards, values, 0.9, 0.0) == pytest.approx(polab.td_errors(rewards, values, 0.9), abs=0)


def test_clip_and_objective():
    assert polab.clip_ratio(1.5) == pytest.approx(1.2)
    assert polab.clip_ratio(0.5, 0.2, 0.28) == pytest.approx(0.8)
    assert polab.ppo_token_objective(1.5, 1.0) == pytest.approx(1.2)
    assert polab.kl_estimate_k3(-1.0, -1.0) == 0.0


def test_aggregation_weights():
    assert polab.aggregation_weights("sample_level", [2, 4]) == pytest.approx([0.25, 0.125])
    assert polab.aggregation_weights("token_level", [2, 4]) == pytest.approx([1 / 6, 1 / 6])


def test_toy_policy_quality():
    direct = (math.exp(-0.01) - math.exp(-0.25)) / (1 - math.exp(-0.25))
    assert polab.toy_policy_quality(0.0, 0.1) == pytest.approx(direct, abs=1e-12)
    assert polab.toy_policy_quality(0.0, 0.1) == pytest.approx(0.95503, abs=5e-5)


def test_countdown_oracle_and_reward():
    sols = polab.countdown_solutions([2, 3, 4], 10)
    assert "2×3+4" in sols
    toks = polab.countdown_tokenize("2*3+4", [2, 3, 4], 10)
    out = polab.countdown_reward(toks, [2, 3, 4], 10)
    assert out["correct"] and out["format_ok"]
    assert out["reward"] == pytest.approx(1.1)


def test_bandit_optimum_is_a_sequence():
    seq, value = polab.bandit_optimum(7)
    assert len(seq) == 3 and 0.0 <= value < 1.0


def test_config_defaults_and_errors():
    cfg = polab.validate_config({"algorithm": "grpo", "env": "countdown"})
    assert cfg["group_size"] == 8
    with pytest.raises(ValueError, match="G < 2"):
        polab.validate_config({"algorithm": "grpo", "group_size": 1})
    with pytest.raises(ValueError, match="foo"):
        polab.validate_config({"algorithm": "grpo", "foo": 1})


def test_short_training_run():
    records = polab.train({"algorithm": "grpo", "env": "seqbandit", "steps": 3, "seed": 5})
    assert [r["step"] for r in records] == [0, 1, 2]
    assert polab.METRICS_CSV_HEADER.split(",") == list(records[0].keys())
    assert all(math.isfinite(r["mean_reward"]) for r in records)
