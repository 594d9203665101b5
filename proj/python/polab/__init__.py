"""Policy-optimization lab: PPO, GRPO, DAPO and VPG on small verifiable tasks."""

import json as _json

from ._polab import (
    METRICS_CSV_HEADER,
    ConfigError,
    aggregation_weights,
    bandit_optimum,
    clip_ratio,
    countdown_reward,
    countdown_solutions,
    countdown_tokenize,
    gae,
    group_relative_advantages,
    kl_estimate_k3,
    ppo_token_objective,
    td_errors,
    toy_policy_quality,
    whiten,
)
from ._polab import train as _train
from ._polab import validate_config as _validate_config


def validate_config(config):
    """Materialize a config (dict or JSON text) with defaults filled in."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_validate_config(text))


def train(config):
    """Run a training job; returns a list of per-step metric dicts."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _train(text)


__all__ = [
    "METRICS_CSV_HEADER",
    "ConfigError",
    "aggregation_weights",
    "bandit_optimum",
    "clip_ratio",
    "countdown_reward",
    "countdown_solutions",
    "countdown_tokenize",
    "gae",
    "group_relative_advantages",
    "kl_estimate_k3",
    "ppo_token_objective",
    "td_errors",
    "toy_policy_quality",
    "train",
    "validate_config",
    "whiten",
]
