"""JSON experiment configuration: parsing and validation against the registry."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from ..specs import (
    HUMAN_KINDS,
    MODES,
    ROBOT_KINDS,
    BatchConfig,
    ConfigError,
    HumanSpec,
    RobotSpec,
)

_HUMAN_KEYS = {
    "kind", "eps", "n_samples", "K", "tau", "tau_role", "gamma", "tie_break",
    "pinned_means",
}
_ROBOT_KEYS = {
    "kind", "inner", "model", "n_particles", "ess_frac", "schedule", "trust",
    "t_explore", "t_observe",
}
_CONFIG_KEYS = {
    "mode", "horizon", "n_arms", "prior", "theta", "human", "robot",
    "n_episodes", "master_seed", "experiment_id", "threads", "block_size",
    "backend",
}


def parse_human(obj: dict) -> HumanSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("human policy spec must be an object with a 'kind'")
    unknown = set(obj) - _HUMAN_KEYS
    if unknown:
        raise ConfigError(f"unknown human policy keys: {sorted(unknown)}")
    if obj["kind"] not in HUMAN_KINDS:
        raise ConfigError(f"unknown human policy kind {obj['kind']!r}")
    kw = dict(obj)
    if "pinned_means" in kw and kw["pinned_means"] is not None:
        kw["pinned_means"] = tuple(kw["pinned_means"])
    return HumanSpec(**kw)


def parse_robot(obj: Optional[dict]) -> RobotSpec:
    if obj is None:
        return RobotSpec(kind="none")
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("robot policy spec must be an object with a 'kind'")
    unknown = set(obj) - _ROBOT_KEYS
    if unknown:
        raise ConfigError(f"unknown robot policy keys: {sorted(unknown)}")
    if obj["kind"] not in ROBOT_KINDS:
        raise ConfigError(f"unknown robot policy kind {obj['kind']!r}")
    kw = dict(obj)
    if kw.get("inner") is not None:
        kw["inner"] = parse_human(kw["inner"])
    if kw.get("model") is not None:
        kw["model"] = parse_human(kw["model"])
    return RobotSpec(**kw)


def parse_config(obj: dict, **overrides) -> BatchConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "mode" not in obj or obj["mode"] not in MODES:
        raise ConfigError(f"config needs a mode from {MODES}")
    if "human" not in obj:
        raise ConfigError("config needs a human policy spec")
    n_arms = int(obj.get("n_arms", 4))
    prior = obj.get("prior") or {}
    theta = obj.get("theta")
    kw = dict(
        mode=obj["mode"],
        horizon=int(obj.get("horizon", 50)),
        n_arms=n_arms,
        human=parse_human(obj["human"]),
        robot=parse_robot(obj.get("robot")),
        prior_alpha=tuple(prior.get("alpha", ())),
        prior_beta=tuple(prior.get("beta", ())),
        prior_fixed=tuple(prior.get("fixed", ())) or (None,) * n_arms,
        theta=tuple(theta) if theta is not None else None,
        n_episodes=int(obj.get("n_episodes", 1)),
        master_seed=int(obj.get("master_seed", 0)),
        experiment_id=int(obj.get("experiment_id", 0)),
        threads=int(obj.get("threads", 1)),
        backend=obj.get("backend", "auto"),
    )
    if "block_size" in obj:
        kw["block_size"] = int(obj["block_size"])
    kw.update(overrides)
    cfg = BatchConfig(**kw)
    cfg.validate()
    return cfg


def load_config(path: Path, **overrides) -> BatchConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}")
    return parse_config(obj, **overrides)
