"""Serializable policy and batch descriptions shared by both engine lanes.

Specs are plain frozen dataclasses: the harness builds them from JSON, the
pure lane instantiates policy objects from them, and the compiled lane maps
them onto integer codes and parameter blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import BetaPrior

__all__ = [
    "ConfigError",
    "HUMAN_KINDS",
    "ROBOT_KINDS",
    "MODES",
    "HumanSpec",
    "RobotSpec",
    "BatchConfig",
    "BatchResult",
]

HUMAN_KINDS = (
    "epsilon_greedy",
    "wsls",
    "communicative",
    "epsilon_optimal",
    "ts",
    "ucl",
    "gi",
)

# Kinds a belief robot can assume for the modeled human.
MODEL_KINDS = ("epsilon_greedy", "wsls", "epsilon_optimal", "ts", "ucl", "gi")

ROBOT_KINDS = (
    "none",
    "copy",
    "most_frequent",
    "glie",
    "wsls_decoder",
    "communicative_decoder",
    "scripted",
    "belief",
)

MODES = ("solo", "inverse_solo", "teleoperation", "turn_taking", "preemptive")


class ConfigError(ValueError):
    """Invalid experiment configuration; rejected before any compute."""


@dataclass(frozen=True)
class HumanSpec:
    kind: str
    eps: float = 0.1
    n_samples: Optional[int] = 1  # ts: None means the exact posterior mean
    K: float = 4.0
    tau: float = 4.0
    tau_role: str = "multiply"
    gamma: float = 0.9  # gi discount
    tie_break: str = "uniform"
    pinned_means: Optional[tuple] = None

    def validate(self, n_arms: int) -> None:
        if self.kind not in HUMAN_KINDS:
            raise ConfigError(f"unknown human policy kind {self.kind!r}")
        if not 0.0 <= self.eps <= 1.0:
            raise ConfigError("eps must lie in [0, 1]")
        if self.kind == "ts" and self.n_samples is not None and self.n_samples < 1:
            raise ConfigError("ts n_samples must be >= 1 or null")
        if self.kind == "ucl" and (self.K <= 0 or self.tau <= 0):
            raise ConfigError("ucl requires positive K and tau")
        if self.tau_role not in ("multiply", "divide"):
            raise ConfigError("tau_role must be 'multiply' or 'divide'")
        if self.kind == "gi" and not 0.0 < self.gamma < 1.0:
            raise ConfigError("gi discount must lie in (0, 1)")
        if self.tie_break not in ("uniform", "lowest"):
            raise ConfigError("tie_break must be 'uniform' or 'lowest'")
        if self.pinned_means is not None and len(self.pinned_means) != n_arms:
            raise ConfigError("pinned_means must have one entry per arm")
        if self.kind == "communicative" and n_arms < 2:
            raise ConfigError("communicative encoding needs at least two arms")

    def label(self) -> str:
        if self.kind == "epsilon_greedy":
            return f"epsilon_greedy({self.eps:g})"
        if self.kind == "epsilon_optimal":
            return f"epsilon_optimal({self.eps:g})"
        if self.kind == "ts":
            n = "inf" if self.n_samples is None else str(self.n_samples)
            return f"ts(n={n})"
        if self.kind == "ucl":
            return f"ucl(K={self.K:g},tau={self.tau:g})"
        if self.kind == "gi":
            return f"gi(gamma={self.gamma:g})"
        return self.kind

    def build(self, n_arms: int, theta=None, gittins_table=None):
        from . import humans

        if self.kind == "epsilon_greedy":
            return humans.EpsilonGreedy(
                n_arms, self.eps, tie_break=self.tie_break, pinned_means=self.pinned_means
            )
        if self.kind == "wsls":
            return humans.WinStayLoseShift(n_arms)
        if self.kind == "communicative":
            return humans.Communicative(n_arms)
        if self.kind == "epsilon_optimal":
            if theta is None:
                raise ValueError("epsilon_optimal needs the instance's theta")
            return humans.EpsilonOptimal(theta, self.eps)
        if self.kind == "ts":
            return humans.ThompsonSampling(n_arms, self.n_samples)
        if self.kind == "ucl":
            return humans.UpperCredibleLimit(n_arms, self.K, self.tau, self.tau_role)
        if self.kind == "gi":
            if gittins_table is None:
                raise ValueError("gi needs a precomputed Gittins table")
            return humans.GittinsIndexPolicy(n_arms, gittins_table)
        raise ConfigError(f"unknown human policy kind {self.kind!r}")


@dataclass(frozen=True)
class RobotSpec:
    kind: str
    inner: Optional[HumanSpec] = None  # decoders: the standard-MAB policy they drive
    model: Optional[HumanSpec] = None  # belief/scripted: assumed human model
    n_particles: int = 2048
    ess_frac: float = 0.5
    schedule: bool = False  # perfect-square GLIE exploration (glie always has it)
    trust: float = 0.5  # belief: posterior best-arm mass needed to override the human
    t_explore: int = 8
    t_observe: int = 16

    def validate(self, n_arms: int, mode: str, horizon: int) -> None:
        if self.kind not in ROBOT_KINDS:
            raise ConfigError(f"unknown robot policy kind {self.kind!r}")
        if mode in ("solo", "inverse_solo") and self.kind != "none":
            raise ConfigError(f"{mode} mode takes robot kind 'none'")
        if mode not in ("solo", "inverse_solo") and self.kind == "none":
            raise ConfigError(f"{mode} mode needs a robot policy")
        if mode == "preemptive" and self.kind not in ("scripted",):
            raise ConfigError("preemptive mode uses the scripted (act-or-defer) robot")
        if self.kind == "scripted" and mode != "preemptive":
            raise ConfigError("the scripted robot only runs in preemptive mode")
        if self.kind in ("wsls_decoder", "communicative_decoder"):
            if self.inner is None:
                raise ConfigError(f"{self.kind} needs an inner policy spec")
            if self.inner.kind in ("epsilon_optimal", "communicative"):
                raise ConfigError("decoder inner policy must be a standard MAB learner")
            self.inner.validate(n_arms)
        if self.kind == "belief" or (self.kind == "scripted" and self.model is not None):
            if self.kind == "belief" and self.model is None:
                raise ConfigError("belief robot needs an assumed human model")
            if self.model is not None:
                if self.model.kind not in MODEL_KINDS:
                    raise ConfigError(
                        f"belief model kind {self.model.kind!r} not supported"
                    )
                self.model.validate(n_arms)
            if self.n_particles < 1:
                raise ConfigError("n_particles must be positive")
            if not 0.0 < self.ess_frac <= 1.0:
                raise ConfigError("ess_frac must lie in (0, 1]")
            if not 0.0 <= self.trust <= 1.0:
                raise ConfigError("trust must lie in [0, 1]")
        if self.kind == "scripted":
            if self.t_explore < 0 or self.t_observe < 0:
                raise ConfigError("phase lengths must be nonnegative")
            if self.t_explore + self.t_observe > horizon:
                raise ConfigError("explore + observe phases exceed the horizon")

    def label(self) -> str:
        if self.kind in ("wsls_decoder", "communicative_decoder"):
            return f"{self.kind}[{self.inner.label()}]"
        if self.kind == "belief":
            sched = ",glie" if self.schedule else ""
            return f"belief[{self.model.label()},P={self.n_particles}{sched}]"
        if self.kind == "scripted":
            model = self.model.label() if self.model is not None else "most_frequent"
            return f"scripted(explore={self.t_explore},observe={self.t_observe})[{model}]"
        return self.kind


@dataclass(frozen=True)
class BatchConfig:
    mode: str
    horizon: int
    n_arms: int
    human: HumanSpec
    robot: RobotSpec = RobotSpec(kind="none")
    prior_alpha: tuple = ()
    prior_beta: tuple = ()
    prior_fixed: tuple = ()
    theta: Optional[tuple] = None  # fixed instance shared by all episodes
    n_episodes: int = 1
    master_seed: int = 0
    experiment_id: int = 0
    record_trajectories: bool = False
    record_curve: bool = False
    prefix_len: int = 0
    backend: str = "auto"  # auto | compiled | pure
    threads: int = 1
    block_size: int = 4096

    def __post_init__(self):
        if not self.prior_alpha:
            object.__setattr__(self, "prior_alpha", (1.0,) * self.n_arms)
        if not self.prior_beta:
            object.__setattr__(self, "prior_beta", (1.0,) * self.n_arms)
        if not self.prior_fixed:
            object.__setattr__(self, "prior_fixed", (None,) * self.n_arms)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.n_arms < 2:
            raise ConfigError("need at least two arms")
        if self.horizon < 1:
            raise ConfigError("horizon must be positive")
        if self.n_episodes < 1:
            raise ConfigError("n_episodes must be positive")
        if self.backend not in ("auto", "compiled", "pure"):
            raise ConfigError("backend must be auto, compiled, or pure")
        self.human.validate(self.n_arms)
        self.robot.validate(self.n_arms, self.mode, self.horizon)
        if self.theta is not None:
            if len(self.theta) != self.n_arms:
                raise ConfigError("theta must have one mean per arm")
            if any(not 0.0 <= v <= 1.0 for v in self.theta):
                raise ConfigError("theta values must lie in [0, 1]")
        if self.human.kind == "epsilon_optimal" and self.theta is None and any(
            v is None for v in self.prior_fixed
        ):
            pass  # fully informed human gets the sampled theta per episode; fine
        prior = self.prior()
        if prior.n_arms != self.n_arms:
            raise ConfigError("prior length does not match n_arms")

    def prior(self) -> BetaPrior:
        return BetaPrior(self.prior_alpha, self.prior_beta, self.prior_fixed)

    def with_(self, **kw) -> "BatchConfig":
        return replace(self, **kw)


@dataclass
class BatchResult:
    """Per-episode outputs merged in episode order; arrays are episode-indexed."""

    regrets: np.ndarray
    jstar: np.ndarray
    backend: str
    curve: Optional[np.ndarray] = None  # mean cumulative regret per round
    sugg_prefix: Optional[np.ndarray] = None  # (E, k) int8, -1 where absent
    exec_prefix: Optional[np.ndarray] = None
    traj_h: Optional[np.ndarray] = None
    traj_a: Optional[np.ndarray] = None
    traj_r: Optional[np.ndarray] = None
    thetas: Optional[np.ndarray] = None
    degeneracy_events: int = 0

    @property
    def n_episodes(self) -> int:
        return len(self.regrets)

    def mean_regret(self) -> float:
        return float(self.regrets.mean())

    def se_regret(self) -> float:
        if len(self.regrets) < 2:
            return 0.0
        return float(self.regrets.std(ddof=1) / np.sqrt(len(self.regrets)))
