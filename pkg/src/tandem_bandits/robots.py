"""Robot-side policies: the arm actually pulled each round.

Robots never see rewards; the API carries only suggestions and executed arms.
The engine drives each robot through three hooks per round:

1. ``see_suggestion(t, arm, rng)`` whenever a suggestion is revealed
   (teleoperation every round; turn-taking on human rounds; preemptive on
   defer rounds),
2. ``choose(t, rng)`` on rounds where the robot executes, or
   ``decide_preempt(t, rng)`` in preemptive mode (an arm, or None to defer),
3. ``after_round(t, executed, rng)`` once the executed arm is known.

Draws come from the episode's robot stream in exactly that hook order.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .humans import HumanPolicy
from .particles import ParticleFilter

__all__ = [
    "PerfectSquareSchedule",
    "RobotPolicy",
    "CopyRobot",
    "MostFrequentRobot",
    "GlieRobot",
    "DecoderRobot",
    "ScriptedPreemptiveRobot",
    "BeliefAssistantRobot",
    "decode_wsls_reward",
    "decode_communicative_reward",
]


def decode_wsls_reward(previous_executed: int, suggestion: int) -> int:
    """A win-stay human repeats the executed arm iff the reward was 1."""
    return int(suggestion == previous_executed)


def decode_communicative_reward(suggestion: int) -> int:
    """The communicative human encodes the reward bit as arm 0 or arm 1."""
    return int(suggestion == 1)


class PerfectSquareSchedule:
    """Round-robin for the first 4*N*N rounds, then explore arm (m mod N) at t = m*m.

    Every arm is scheduled infinitely often and the explore count up to t
    never exceeds 2*N*sqrt(t) (the burst fits under that envelope because
    density <= 1 <= 2N/sqrt(t) while t <= 4N^2), so the density decays to
    zero: the GLIE conditions hold constructively.  The burst buys the
    assisted human enough early data that the per-round regret keeps falling
    clearly faster than the explore rate alone.
    """

    def arm_at(self, t: int, n_arms: int) -> Optional[int]:
        if t <= 4 * n_arms * n_arms:
            return (t - 1) % n_arms
        m = math.isqrt(t)
        if m * m == t:
            return m % n_arms
        return None

    def explore_rounds(self, horizon: int, n_arms: int) -> list[int]:
        return [t for t in range(1, horizon + 1) if self.arm_at(t, n_arms) is not None]


class RobotPolicy:
    n_arms: int

    def reset(self) -> None:
        raise NotImplementedError

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        pass

    def choose(self, t: int, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def decide_preempt(self, t: int, rng: np.random.Generator) -> Optional[int]:
        raise NotImplementedError(f"{type(self).__name__} does not run preemptively")

    def after_round(self, t: int, executed: int, rng: np.random.Generator) -> None:
        pass


class _SuggestionCounting(RobotPolicy):
    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.counts = np.zeros(n_arms, dtype=np.int64)

    def reset(self) -> None:
        self.counts.fill(0)

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        self.counts[arm] += 1

    def most_frequent(self, rng: np.random.Generator) -> int:
        if self.counts.sum() == 0:
            return int(rng.random() * self.n_arms)
        top = self.counts.max()
        ties = [j for j in range(self.n_arms) if self.counts[j] == top]
        if len(ties) == 1:
            return ties[0]
        return ties[int(rng.random() * len(ties))]


class CopyRobot(_SuggestionCounting):
    """Execute the suggestion; fall back to the most frequent one when absent."""

    def __init__(self, n_arms: int):
        super().__init__(n_arms)
        self._current_t = -1
        self._current_arm = -1

    def reset(self) -> None:
        super().reset()
        self._current_t = -1

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        super().see_suggestion(t, arm, rng)
        self._current_t = t
        self._current_arm = arm

    def choose(self, t: int, rng: np.random.Generator) -> int:
        if self._current_t == t:
            return self._current_arm
        return self.most_frequent(rng)


class MostFrequentRobot(_SuggestionCounting):
    """Execute the most frequently suggested arm; ties uniform at random."""

    def choose(self, t: int, rng: np.random.Generator) -> int:
        return self.most_frequent(rng)


class GlieRobot(_SuggestionCounting):
    """Most-frequent-suggestion play interleaved with a decaying explore schedule."""

    def __init__(self, n_arms: int, schedule: Optional[PerfectSquareSchedule] = None):
        super().__init__(n_arms)
        self.schedule = schedule or PerfectSquareSchedule()

    def choose(self, t: int, rng: np.random.Generator) -> int:
        arm = self.schedule.arm_at(t, self.n_arms)
        if arm is not None:
            return arm
        return self.most_frequent(rng)


class DecoderRobot(RobotPolicy):
    """Decode the human's reward bit from suggestions and drive an inner learner.

    With a win-stay-lose-shift human the pair (previous executed arm, current
    suggestion) encodes the previous reward exactly, so the inner policy sees
    the true reward stream and plays the standard bandit.
    """

    def __init__(self, n_arms: int, inner: HumanPolicy, decode: str = "wsls"):
        if decode not in ("wsls", "communicative"):
            raise ValueError("decode must be 'wsls' or 'communicative'")
        self.n_arms = n_arms
        self.inner = inner
        self.decode = decode
        self.prev_executed: Optional[int] = None

    def reset(self) -> None:
        self.inner.reset()
        self.prev_executed = None

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        if self.prev_executed is None:
            return  # round 1 carries no decodable reward
        if self.decode == "wsls":
            r = decode_wsls_reward(self.prev_executed, arm)
        else:
            r = decode_communicative_reward(arm)
        self.inner.observe(self.prev_executed, r)

    def choose(self, t: int, rng: np.random.Generator) -> int:
        return self.inner.suggest(rng)

    def after_round(self, t: int, executed: int, rng: np.random.Generator) -> None:
        self.prev_executed = executed


class ScriptedPreemptiveRobot(_SuggestionCounting):
    """Explore round-robin, defer to the human, then exploit the belief.

    Exploit plays the particle posterior's most-likely-best arm when a filter
    is attached, otherwise the most frequently observed suggestion.
    """

    def __init__(
        self,
        n_arms: int,
        t_explore: int,
        t_observe: int,
        particle_filter: Optional[ParticleFilter] = None,
    ):
        super().__init__(n_arms)
        self.t_explore = t_explore
        self.t_observe = t_observe
        self.filter = particle_filter

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        super().see_suggestion(t, arm, rng)
        if self.filter is not None:
            self.filter.reweight(arm)
            self.filter.maybe_resample(rng)

    def decide_preempt(self, t: int, rng: np.random.Generator) -> Optional[int]:
        if t <= self.t_explore:
            return (t - 1) % self.n_arms
        if t <= self.t_explore + self.t_observe:
            return None
        if self.filter is not None:
            return self.filter.map_best_arm()
        return self.most_frequent(rng)

    def after_round(self, t: int, executed: int, rng: np.random.Generator) -> None:
        if self.filter is not None:
            self.filter.propagate(executed, rng)


class BeliefAssistantRobot(RobotPolicy):
    """Particle-belief assistant: reweight on suggestions, trust then correct.

    Acting order: a scheduled explore arm when the GLIE schedule fires; the
    posterior's most-likely-best arm once its mass reaches ``trust``; the
    current suggestion while still uncertain (the human knows more early on);
    a particle Thompson draw when no suggestion is available this round.
    """

    def __init__(
        self,
        n_arms: int,
        particle_filter: ParticleFilter,
        schedule: Optional[PerfectSquareSchedule] = None,
        trust: float = 0.5,
    ):
        self.n_arms = n_arms
        self.filter = particle_filter
        self.schedule = schedule
        self.trust = trust
        self._cur_t = -1
        self._last_sugg = -1

    def reset(self) -> None:
        raise NotImplementedError("build a fresh filter per episode")

    def see_suggestion(self, t: int, arm: int, rng: np.random.Generator) -> None:
        self.filter.reweight(arm)
        self.filter.maybe_resample(rng)
        self._cur_t = t
        self._last_sugg = arm

    def choose(self, t: int, rng: np.random.Generator) -> int:
        if self.schedule is not None:
            arm = self.schedule.arm_at(t, self.n_arms)
            if arm is not None:
                return arm
        arm, frac = self.filter.trusted_pick()
        if frac >= self.trust:
            return arm
        if self._cur_t == t:
            # a fresh suggestion: execute it, inheriting the human's exploration
            return self._last_sugg
        # no suggestion this round: draw from the model's predictive, a
        # calibrated clone of what the human would have asked for
        return self.filter.sample_predicted(rng)

    def after_round(self, t: int, executed: int, rng: np.random.Generator) -> None:
        self.filter.propagate(executed, rng)
