"""Pure-Python episode driver: the reference semantics for both engine lanes.

Per-round protocol (three independent streams per episode: env, human, robot):

* teleoperation: human suggests from its (executed, reward) history; the
  robot sees the suggestion, then executes; the human observes the executed
  arm and reward; the robot observes only (suggestion, executed).
* turn_taking: odd rounds the human's suggestion is executed directly; even
  rounds the robot acts with no suggestion revealed.  The human observes
  every executed arm and reward.
* preemptive: the robot first acts or defers; on defer the human's arm is
  executed and the suggestion revealed, otherwise no suggestion that round.
* solo / inverse_solo: the human plays alone (suggestion == executed).

The reward for round t is drawn from the env stream as one uniform,
``r = u < theta[a]``, in every mode.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import (
    ROLE_ENV,
    ROLE_HUMAN,
    ROLE_ROBOT,
    BanditInstance,
    BetaPrior,
    SeedTree,
    sample_instance,
)
from ..particles import ParticleFilter
from ..robots import (
    BeliefAssistantRobot,
    CopyRobot,
    DecoderRobot,
    GlieRobot,
    MostFrequentRobot,
    PerfectSquareSchedule,
    RobotPolicy,
    ScriptedPreemptiveRobot,
)
from ..specs import BatchConfig
from .tables import TableSet

__all__ = ["run_block_reference", "build_robot_for_episode"]


def _build_human(cfg: BatchConfig, tables: TableSet, theta: np.ndarray):
    gittins = tables.gittins.get(cfg.human.gamma) if cfg.human.kind == "gi" else None
    return cfg.human.build(cfg.n_arms, theta=theta, gittins_table=gittins)


def build_robot_for_episode(
    cfg: BatchConfig,
    tables: TableSet,
    prior: BetaPrior,
    robot_rng: np.random.Generator,
) -> Optional[RobotPolicy]:
    spec = cfg.robot
    n = cfg.n_arms
    if spec.kind == "none":
        return None
    if spec.kind == "copy":
        return CopyRobot(n)
    if spec.kind == "most_frequent":
        return MostFrequentRobot(n)
    if spec.kind == "glie":
        return GlieRobot(n)
    if spec.kind in ("wsls_decoder", "communicative_decoder"):
        inner_gittins = (
            tables.gittins.get(spec.inner.gamma) if spec.inner.kind == "gi" else None
        )
        inner = spec.inner.build(n, gittins_table=inner_gittins)
        decode = "wsls" if spec.kind == "wsls_decoder" else "communicative"
        return DecoderRobot(n, inner, decode)
    if spec.kind == "belief":
        pf = ParticleFilter(
            spec.model, n, spec.n_particles, prior, tables, spec.ess_frac, robot_rng
        )
        schedule = PerfectSquareSchedule() if spec.schedule else None
        return BeliefAssistantRobot(n, pf, schedule, spec.trust)
    if spec.kind == "scripted":
        pf = None
        if spec.model is not None:
            pf = ParticleFilter(
                spec.model, n, spec.n_particles, prior, tables, spec.ess_frac, robot_rng
            )
        return ScriptedPreemptiveRobot(n, spec.t_explore, spec.t_observe, pf)
    raise ValueError(f"unknown robot kind {spec.kind!r}")


def run_block_reference(cfg: BatchConfig, lo: int, hi: int, tables: TableSet) -> dict:
    """Simulate episodes [lo, hi) and return partial result arrays."""
    E = hi - lo
    T = cfg.horizon
    N = cfg.n_arms
    k = cfg.prefix_len
    tree = SeedTree(cfg.master_seed)
    prior = cfg.prior()

    regrets = np.zeros(E)
    jstar = np.zeros(E, dtype=np.int8)
    curve = np.zeros(T) if cfg.record_curve else None
    sugg_prefix = np.full((E, k), -1, dtype=np.int8) if k else None
    exec_prefix = np.full((E, k), -1, dtype=np.int8) if k else None
    traj_h = np.full((E, T), -1, dtype=np.int8) if cfg.record_trajectories else None
    traj_a = np.zeros((E, T), dtype=np.int8) if cfg.record_trajectories else None
    traj_r = np.zeros((E, T), dtype=np.int8) if cfg.record_trajectories else None
    thetas = np.zeros((E, N)) if cfg.record_trajectories else None
    degeneracy = 0

    fixed_theta = None if cfg.theta is None else np.asarray(cfg.theta, dtype=np.float64)

    for i in range(E):
        ep = lo + i
        erng = tree.stream(cfg.experiment_id, ep, ROLE_ENV)
        hrng = tree.stream(cfg.experiment_id, ep, ROLE_HUMAN)
        rrng = tree.stream(cfg.experiment_id, ep, ROLE_ROBOT)

        if fixed_theta is not None:
            instance = BanditInstance(fixed_theta)
        else:
            instance = sample_instance(prior, erng)
        human = _build_human(cfg, tables, instance.theta)
        robot = build_robot_for_episode(cfg, tables, prior, rrng)

        theta = instance.theta
        gaps = instance.best_mean - theta
        cum_regret = 0.0
        jstar[i] = instance.best_arm
        if thetas is not None:
            thetas[i] = theta

        for t in range(1, T + 1):
            h: Optional[int]
            if cfg.mode in ("solo", "inverse_solo"):
                h = human.suggest(hrng)
                a = h
            elif cfg.mode == "teleoperation":
                h = human.suggest(hrng)
                robot.see_suggestion(t, h, rrng)
                a = robot.choose(t, rrng)
            elif cfg.mode == "turn_taking":
                if t % 2 == 1:
                    h = human.suggest(hrng)
                    robot.see_suggestion(t, h, rrng)
                    a = h
                else:
                    h = None
                    a = robot.choose(t, rrng)
            elif cfg.mode == "preemptive":
                d = robot.decide_preempt(t, rrng)
                if d is None:
                    h = human.suggest(hrng)
                    robot.see_suggestion(t, h, rrng)
                    a = h
                else:
                    h = None
                    a = d
            else:
                raise ValueError(cfg.mode)

            r = 1 if erng.random() < theta[a] else 0
            human.observe(a, r)
            if robot is not None:
                robot.after_round(t, a, rrng)

            cum_regret += gaps[a]
            if curve is not None:
                curve[t - 1] += cum_regret
            if k and t <= k:
                if h is not None:
                    sugg_prefix[i, t - 1] = h
                exec_prefix[i, t - 1] = a
            if traj_h is not None:
                if h is not None:
                    traj_h[i, t - 1] = h
                traj_a[i, t - 1] = a
                traj_r[i, t - 1] = r

        regrets[i] = cum_regret
        if isinstance(robot, BeliefAssistantRobot):
            degeneracy += robot.filter.degeneracy_events
        elif isinstance(robot, ScriptedPreemptiveRobot) and robot.filter is not None:
            degeneracy += robot.filter.degeneracy_events

    return {
        "regrets": regrets,
        "jstar": jstar,
        "curve": curve,
        "sugg_prefix": sugg_prefix,
        "exec_prefix": exec_prefix,
        "traj_h": traj_h,
        "traj_a": traj_a,
        "traj_r": traj_r,
        "thetas": thetas,
        "degeneracy": degeneracy,
    }
