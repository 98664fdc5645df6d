"""Compare the compiled and pure engine lanes on representative workloads.

Also exposed as ``tandem-bandits bench``.  The two lanes produce bit-identical
trajectories (asserted here on a small slice); the table reports throughput.
"""

from __future__ import annotations

import time

import numpy as np

from . import engine
from .specs import BatchConfig, HumanSpec, RobotSpec


def _workloads(master_seed: int):
    base = dict(horizon=50, n_arms=4, master_seed=master_seed)
    return [
        ("solo ts(n=1)", BatchConfig(mode="solo", human=HumanSpec("ts"), **base)),
        ("solo gi(0.9)", BatchConfig(mode="solo", human=HumanSpec("gi"), **base)),
        (
            "teleop eps-opt + most_frequent",
            BatchConfig(mode="teleoperation", human=HumanSpec("epsilon_optimal"),
                        robot=RobotSpec("most_frequent"), **base),
        ),
        (
            "teleop wsls + decoder[gi]",
            BatchConfig(mode="teleoperation", human=HumanSpec("wsls"),
                        robot=RobotSpec("wsls_decoder", inner=HumanSpec("gi")), **base),
        ),
        (
            "teleop eps-greedy + belief[P=2048]",
            BatchConfig(mode="teleoperation", human=HumanSpec("epsilon_greedy"),
                        robot=RobotSpec("belief", model=HumanSpec("epsilon_greedy"),
                                        n_particles=2048), **base),
        ),
    ]


def run_benchmarks(n_episodes: int = 500, master_seed: int = 0) -> None:
    if not engine.HAVE_COMPILED:
        print("compiled engine not built; nothing to compare")
        return
    print(f"{'workload':38s} {'compiled':>12s} {'pure':>12s} {'speedup':>8s}")
    for name, cfg in _workloads(master_seed):
        n = n_episodes if cfg.robot.kind != "belief" else max(20, n_episodes // 10)
        cfg = cfg.with_(n_episodes=n)
        check = cfg.with_(n_episodes=min(n, 10), record_trajectories=True)
        a = engine.run_batch(check.with_(backend="compiled"))
        b = engine.run_batch(check.with_(backend="pure"))
        assert np.array_equal(a.traj_a, b.traj_a), f"lane mismatch in {name}"

        t0 = time.perf_counter()
        engine.run_batch(cfg.with_(backend="compiled"))
        tc = time.perf_counter() - t0
        t0 = time.perf_counter()
        engine.run_batch(cfg.with_(backend="pure"))
        tp = time.perf_counter() - t0
        rounds = n * cfg.horizon
        print(
            f"{name:38s} {rounds / tc / 1e3:9.1f}k r/s {rounds / tp / 1e3:9.1f}k r/s "
            f"{tp / tc:7.1f}x"
        )
