"""Experiment runners built on the engine: single episodes, summarized
batches, and the cross-model assistance grid."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import engine
from ..core import BanditInstance, StepRecord, Trajectory, SeedTree
from ..specs import BatchConfig, BatchResult, HumanSpec, RobotSpec
from . import csvio

__all__ = [
    "run_episode",
    "run_batch_summary",
    "run_cross_model_grid",
    "RegretSummary",
    "format_trajectory",
]


@dataclass
class RegretSummary:
    human_policy: str
    robot_policy: str
    mode: str
    n_episodes: int
    mean_regret: float
    se: float
    curve: Optional[np.ndarray] = None

    def row(self) -> list:
        return [
            self.human_policy, self.robot_policy, self.mode,
            self.n_episodes, self.mean_regret, self.se,
        ]


def run_episode(cfg: BatchConfig, episode_index: int = 0) -> Trajectory:
    """Simulate one episode (by absolute index under the config's seed tree)."""
    one = cfg.with_(n_episodes=1, record_trajectories=True, threads=1)
    one.validate()
    from ..engine import _lane_for, reference
    from ..engine.tables import build_tables

    tables = build_tables(one)
    lane = _lane_for(one)
    if lane == "compiled":
        from ..engine import fast

        part = fast.run_block_compiled(one, episode_index, episode_index + 1, tables)
    else:
        part = reference.run_block_reference(one, episode_index, episode_index + 1, tables)
    instance = BanditInstance(part["thetas"][0])
    steps = []
    for t in range(cfg.horizon):
        h = int(part["traj_h"][0, t])
        steps.append(
            StepRecord(
                t=t + 1,
                human_arm=None if h < 0 else h,
                executed_arm=int(part["traj_a"][0, t]),
                reward=int(part["traj_r"][0, t]),
            )
        )
    seed = SeedTree(cfg.master_seed).episode_seed(cfg.experiment_id, episode_index)
    return Trajectory(instance=instance, steps=tuple(steps), episode_seed=seed)


def summarize(cfg: BatchConfig, result: BatchResult) -> RegretSummary:
    return RegretSummary(
        human_policy=cfg.human.label(),
        robot_policy=cfg.robot.label(),
        mode=cfg.mode,
        n_episodes=result.n_episodes,
        mean_regret=result.mean_regret(),
        se=result.se_regret(),
        curve=result.curve,
    )


def run_batch_summary(
    cfg: BatchConfig,
    out_dir: Optional[Path] = None,
    save_trajectories: bool = False,
) -> RegretSummary:
    cfg = cfg.with_(
        record_curve=True,
        record_trajectories=save_trajectories or cfg.record_trajectories,
    )
    result = engine.run_batch(cfg)
    summary = summarize(cfg, result)
    if out_dir is not None:
        out_dir = Path(out_dir)
        csvio.write_csv(out_dir / "regret.csv", csvio.SCHEMAS["regret"], [summary.row()])
        curve_rows = [
            [summary.human_policy, summary.robot_policy, t + 1, float(v)]
            for t, v in enumerate(result.curve)
        ]
        csvio.write_csv(out_dir / "regret_curve.csv", csvio.SCHEMAS["regret_curve"], curve_rows)
        if save_trajectories:
            csvio.write_csv(
                out_dir / "trajectories.csv",
                csvio.trajectory_header(cfg.n_arms),
                csvio.trajectory_rows(result, cfg.n_arms),
            )
    return summary


def _assisted_robot_for(assumed: HumanSpec, mode: str, n_particles: int, trust: float) -> RobotSpec:
    """The robot used when the human is modeled as ``assumed``.

    A noisily-optimal assumption needs no belief tracking: playing the most
    frequently suggested arm is the matching construction.  Preemptive mode
    wraps the same beliefs in the scripted act-or-defer protocol, with no
    explore phase under the noisy-optimality assumption.
    """
    if mode == "preemptive":
        if assumed.kind == "epsilon_optimal":
            return RobotSpec(kind="scripted", t_explore=0, t_observe=16)
        return RobotSpec(
            kind="scripted", model=assumed, n_particles=n_particles,
            t_explore=8, t_observe=16,
        )
    if assumed.kind == "epsilon_optimal":
        return RobotSpec(kind="most_frequent")
    return RobotSpec(kind="belief", model=assumed, n_particles=n_particles, trust=trust)


def run_cross_model_grid(
    actual: Sequence[HumanSpec],
    assumed: Sequence[HumanSpec],
    mode: str = "teleoperation",
    horizon: int = 50,
    n_arms: int = 4,
    n_episodes: int = 10_000,
    master_seed: int = 0,
    n_particles: int = 2048,
    trust: float = 0.5,
    threads: int = 1,
) -> list[list]:
    """Reward increase from assistance for each (actual, assumed) pair.

    With coupled instance seeds the reward delta equals the paired per-episode
    regret drop (solo minus assisted), which is what we report with its
    paired standard error.
    """
    rows = []
    solo_cache: dict[str, np.ndarray] = {}
    for ai, act in enumerate(actual):
        solo_cfg = BatchConfig(
            mode="solo", horizon=horizon, n_arms=n_arms, human=act,
            n_episodes=n_episodes, master_seed=master_seed,
            experiment_id=1000 + ai, threads=threads,
        )
        key = act.label()
        if key not in solo_cache:
            solo_cache[key] = engine.run_batch(solo_cfg).regrets
        solo = solo_cache[key]
        for asm in assumed:
            robot = _assisted_robot_for(asm, mode, n_particles, trust)
            cfg = BatchConfig(
                mode=mode, horizon=horizon, n_arms=n_arms, human=act, robot=robot,
                n_episodes=n_episodes, master_seed=master_seed,
                experiment_id=1000 + ai, threads=threads,
            )
            assisted = engine.run_batch(cfg).regrets
            delta = solo - assisted  # paired: same instances per episode index
            rows.append(
                [act.label(), asm.label(), mode, float(delta.mean()),
                 float(delta.std(ddof=1) / np.sqrt(len(delta)))]
            )
    return rows


def format_trajectory(traj: Trajectory) -> str:
    """Three-row timeline: suggestions, executed arms, rewards."""
    t_row = "t        " + " ".join(f"{s.t:2d}" for s in traj.steps)
    h_row = "suggest  " + " ".join(
        " ." if s.human_arm is None else f"{s.human_arm:2d}" for s in traj.steps
    )
    a_row = "execute  " + " ".join(f"{s.executed_arm:2d}" for s in traj.steps)
    r_row = "reward   " + " ".join(f"{s.reward:2d}" for s in traj.steps)
    theta = ", ".join(f"{v:.3f}" for v in traj.instance.theta)
    head = f"theta = ({theta}), best arm = {traj.instance.best_arm}"
    return "\n".join([head, t_row, h_row, a_row, r_row])
