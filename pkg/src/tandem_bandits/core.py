"""Bandit environment primitives: instances, priors, trajectories, regret, seeding.

Everything here is immutable after construction and safe to share across
threads.  Random streams are never stored on these objects; callers pass a
``numpy.random.Generator`` derived from a :class:`SeedTree`.

Arm indices are 0-based everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ROLE_ENV",
    "ROLE_HUMAN",
    "ROLE_ROBOT",
    "ROLE_ANALYSIS",
    "SeedTree",
    "BetaPrior",
    "BanditInstance",
    "StepRecord",
    "Trajectory",
    "RegretLedger",
    "sample_instance",
    "pull",
    "regret_of",
    "empirical_frequencies",
]

# Stream roles within one episode.
ROLE_ENV = 0
ROLE_HUMAN = 1
ROLE_ROBOT = 2
ROLE_ANALYSIS = 3


@dataclass(frozen=True)
class SeedTree:
    """Counter-based splittable randomness.

    Identical ``(master_seed, path)`` pairs yield identical streams; distinct
    paths yield statistically independent streams.  Episodes can therefore be
    simulated in any order, or in parallel, with bit-reproducible results.
    """

    master_seed: int

    def stream(self, experiment: int, episode: int, role: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(experiment, episode, role)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def episode_seed(self, experiment: int, episode: int) -> int:
        """A stable 64-bit label for one episode (metadata only)."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(experiment, episode))
        return int(seq.generate_state(1, dtype=np.uint64)[0])


class BetaPrior:
    """Independent per-arm Beta(alpha0, beta0) priors over Bernoulli means.

    An arm may instead carry a known mean via ``fixed``; such arms consume no
    randomness when an instance is sampled (used for the 1.5-arm bandit).
    """

    def __init__(
        self,
        alpha: Sequence[float],
        beta: Sequence[float],
        fixed: Optional[Sequence[Optional[float]]] = None,
    ):
        self.alpha = np.asarray(alpha, dtype=np.float64)
        self.beta = np.asarray(beta, dtype=np.float64)
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-d and the same length")
        if np.any(self.alpha <= 0) or np.any(self.beta <= 0):
            raise ValueError("prior parameters must be positive")
        n = len(self.alpha)
        if fixed is None:
            fixed = [None] * n
        if len(fixed) != n:
            raise ValueError("fixed must have one entry per arm")
        for v in fixed:
            if v is not None and not (0.0 <= v <= 1.0):
                raise ValueError("fixed means must lie in [0, 1]")
        self.fixed = tuple(fixed)
        self.alpha.setflags(write=False)
        self.beta.setflags(write=False)

    @classmethod
    def uniform(cls, n_arms: int) -> "BetaPrior":
        return cls(np.ones(n_arms), np.ones(n_arms))

    @property
    def n_arms(self) -> int:
        return len(self.alpha)

    def fixed_array(self) -> np.ndarray:
        """Fixed means as float64 with NaN for free arms (engine wire format)."""
        out = np.full(self.n_arms, np.nan)
        for i, v in enumerate(self.fixed):
            if v is not None:
                out[i] = v
        return out

    def __repr__(self) -> str:
        return f"BetaPrior(alpha={self.alpha.tolist()}, beta={self.beta.tolist()}, fixed={self.fixed})"


class BanditInstance:
    """A Bernoulli bandit: arm means theta, derived best arm and best mean.

    Best-arm ties resolve to the lowest index; this affects bookkeeping only,
    never the rewards.
    """

    __slots__ = ("theta", "n_arms", "best_arm", "best_mean")

    def __init__(self, theta: Sequence[float]):
        theta = np.asarray(theta, dtype=np.float64).copy()
        if theta.ndim != 1 or len(theta) < 2:
            raise ValueError("need at least two arms")
        if np.any(theta < 0.0) or np.any(theta > 1.0):
            raise ValueError("arm means must lie in [0, 1]")
        theta.setflags(write=False)
        self.theta = theta
        self.n_arms = len(theta)
        self.best_arm = int(np.argmax(theta))  # argmax takes the lowest index on ties
        self.best_mean = float(theta[self.best_arm])

    def gap(self, arm: int) -> float:
        return self.best_mean - float(self.theta[arm])

    def __repr__(self) -> str:
        return f"BanditInstance(theta={self.theta.tolist()})"


def sample_instance(prior: BetaPrior, rng: np.random.Generator) -> BanditInstance:
    """Draw theta from the prior, one Beta draw per free arm in arm order."""
    theta = np.empty(prior.n_arms)
    free = [i for i, v in enumerate(prior.fixed) if v is None]
    if free:
        theta[free] = rng.beta(prior.alpha[free], prior.beta[free])
    for i, v in enumerate(prior.fixed):
        if v is not None:
            theta[i] = v
    return BanditInstance(theta)


def pull(instance: BanditInstance, arm: int, rng: np.random.Generator) -> int:
    """One Bernoulli(theta_arm) reward; consumes exactly one uniform."""
    if not 0 <= arm < instance.n_arms:
        raise ValueError(f"arm {arm} out of range [0, {instance.n_arms})")
    return int(rng.random() < instance.theta[arm])


@dataclass(frozen=True)
class StepRecord:
    """One round: suggestion (None when the human did not act), execution, reward."""

    t: int  # round index from 1
    human_arm: Optional[int]
    executed_arm: int
    reward: int


@dataclass(frozen=True)
class Trajectory:
    instance: BanditInstance
    steps: tuple[StepRecord, ...]
    episode_seed: int = 0

    @property
    def executed_arms(self) -> list[int]:
        return [s.executed_arm for s in self.steps]

    @property
    def suggested_arms(self) -> list[Optional[int]]:
        return [s.human_arm for s in self.steps]

    @property
    def rewards(self) -> list[int]:
        return [s.reward for s in self.steps]


class RegretLedger:
    """Per-arm pull counts and incrementally maintained cumulative regret."""

    def __init__(self, instance: BanditInstance):
        self.instance = instance
        self.pull_counts = np.zeros(instance.n_arms, dtype=np.int64)
        self.cumulative_regret = 0.0

    @property
    def t(self) -> int:
        return int(self.pull_counts.sum())

    def record(self, arm: int) -> None:
        if not 0 <= arm < self.instance.n_arms:
            raise ValueError(f"arm {arm} out of range")
        self.pull_counts[arm] += 1
        self.cumulative_regret += self.instance.gap(arm)

    def recompute(self) -> float:
        """Regret re-derived from pull counts; matches the running value to 1e-9."""
        gaps = self.instance.best_mean - self.instance.theta
        return float(np.dot(gaps, self.pull_counts))


def regret_of(instance: BanditInstance, trajectory: Trajectory) -> float:
    """Cumulative regret of the executed arms (suggestions never count)."""
    counts = np.zeros(instance.n_arms, dtype=np.int64)
    for step in trajectory.steps:
        if not 0 <= step.executed_arm < instance.n_arms:
            raise ValueError(f"executed arm {step.executed_arm} out of range")
        counts[step.executed_arm] += 1
    gaps = instance.best_mean - instance.theta
    return float(np.dot(gaps, counts))


def empirical_frequencies(arms: Sequence[int], n_arms: int) -> np.ndarray:
    """Normalized pull frequencies; rejects an empty sequence."""
    arms = np.asarray(arms, dtype=np.int64)
    if arms.size == 0:
        raise ValueError("empty arm sequence")
    if np.any(arms < 0) or np.any(arms >= n_arms):
        raise ValueError("arm index out of range")
    counts = np.bincount(arms, minlength=n_arms)
    return counts / arms.size
