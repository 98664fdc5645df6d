"""Desk-scale reproductions of the headline experiments and the property
checks, each writing fixed-schema CSVs.

Default episode counts (all overridable): 100,000 for non-particle regret
tables, 10,000 for particle-robot runs, 200 instances for the inference
table.  Experiment ids keep the random streams of distinct studies disjoint
while coupling paired conditions (same instances per episode index).
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .. import engine
from ..core import ROLE_ANALYSIS, SeedTree
from ..gittins import get_gittins_table
from ..inference import (
    ActionOnlyObservation,
    estimate_mi_best_arm,
    log_density_at,
    mh_posterior_batch,
    mutual_information_bits,
)
from ..specs import BatchConfig, HumanSpec, RobotSpec
from . import csvio
from .runner import _assisted_robot_for, run_cross_model_grid, run_episode

REPRODUCE_IDS = ("table1", "fig3", "fig4", "fig5", "table2", "fig2-traj", "props")

LEARNERS = (
    HumanSpec("epsilon_greedy", eps=0.1),
    HumanSpec("wsls"),
    HumanSpec("ts", n_samples=1),
    HumanSpec("ucl"),
    HumanSpec("gi", gamma=0.9),
)
EPS_OPT = HumanSpec("epsilon_optimal", eps=0.1)

FIG4_VARIANTS = tuple(
    [("epsilon_greedy", f"{e:g}", HumanSpec("epsilon_greedy", eps=e)) for e in (0.0, 0.02, 0.05, 0.1)]
    + [("ts", "inf" if n is None else str(n), HumanSpec("ts", n_samples=n))
       for n in (1, 2, 3, 10, 30, None)]
)

# the 1.5-arm construction: arm 0 has a known mean the human never relearns
HALF_ARM_PRIOR = dict(n_arms=2, prior_fixed=(0.5, None))
GREEDY_PINNED = HumanSpec(
    "epsilon_greedy", eps=0.0, tie_break="lowest", pinned_means=(0.5, None)
)

N_CHEAP = 100_000
N_PARTICLE = 10_000
N_INSTANCES = 200


def _mean_se(regrets: np.ndarray) -> tuple[float, float]:
    return float(regrets.mean()), float(regrets.std(ddof=1) / math.sqrt(len(regrets)))


def fig3(out_dir: Path, master_seed: int = 0, episodes: Optional[int] = None,
         particle_episodes: Optional[int] = None, threads: int = 1) -> list[list]:
    """Solo vs correct-model belief assistance vs noisy-optimality assumption."""
    n_cheap = episodes or N_CHEAP
    n_part = particle_episodes or N_PARTICLE
    rows = []
    curves = []
    for li, human in enumerate(LEARNERS):
        exp = 300 + li
        conds = [
            (RobotSpec(kind="none"), "solo", n_cheap),
            (RobotSpec(kind="belief", model=human, n_particles=2048), "teleoperation", n_part),
            (RobotSpec(kind="most_frequent"), "teleoperation", n_cheap),
        ]
        for robot, mode, n in conds:
            cfg = BatchConfig(
                mode=mode, horizon=50, n_arms=4, human=human, robot=robot,
                n_episodes=n, master_seed=master_seed, experiment_id=exp,
                threads=threads, record_curve=True,
            )
            res = engine.run_batch(cfg)
            mean, se = _mean_se(res.regrets)
            rows.append([human.label(), robot.label(), mode, n, mean, se])
            curves.extend(
                [human.label(), robot.label(), t + 1, float(v)]
                for t, v in enumerate(res.curve)
            )
    csvio.write_csv(Path(out_dir) / "regret.csv", csvio.SCHEMAS["regret"], rows)
    csvio.write_csv(Path(out_dir) / "regret_curve.csv", csvio.SCHEMAS["regret_curve"], curves)
    return rows


def fig5(out_dir: Path, master_seed: int = 0, episodes: Optional[int] = None,
         particle_episodes: Optional[int] = None, threads: int = 1) -> list[list]:
    """The fig3 comparison under the turn-taking and preemptive protocols."""
    n_cheap = episodes or N_CHEAP
    n_part = particle_episodes or N_PARTICLE
    humans = [h for h in LEARNERS if h.kind != "gi"]
    rows = []
    for li, human in enumerate(humans):
        exp = 500 + li
        solo_cfg = BatchConfig(
            mode="solo", horizon=50, n_arms=4, human=human, n_episodes=n_cheap,
            master_seed=master_seed, experiment_id=exp, threads=threads,
        )
        mean, se = _mean_se(engine.run_batch(solo_cfg).regrets)
        rows.append([human.label(), "none", "solo", n_cheap, mean, se])
        for mode in ("turn_taking", "preemptive"):
            for assumed, n in ((human, n_part), (EPS_OPT, n_cheap)):
                robot = _assisted_robot_for(assumed, mode, 2048, 0.5)
                n_run = n if (robot.kind in ("belief",) or robot.model is not None) else n_cheap
                cfg = BatchConfig(
                    mode=mode, horizon=50, n_arms=4, human=human, robot=robot,
                    n_episodes=n_run, master_seed=master_seed, experiment_id=exp,
                    threads=threads,
                )
                mean, se = _mean_se(engine.run_batch(cfg).regrets)
                rows.append([human.label(), robot.label(), mode, n_run, mean, se])
    csvio.write_csv(Path(out_dir) / "regret.csv", csvio.SCHEMAS["regret"], rows)
    return rows


def fig4(out_dir: Path, master_seed: int = 0, episodes: Optional[int] = None,
         threads: int = 1, prefix_t: int = 5) -> list[list]:
    """MI between the best arm and the first suggestions vs assisted regret,
    across the determinism-variant grid, all assisted by the belief robot."""
    n = episodes or N_PARTICLE
    rows = []
    for vi, (policy, variant, human) in enumerate(FIG4_VARIANTS):
        cfg = BatchConfig(
            mode="teleoperation", horizon=50, n_arms=4, human=human,
            robot=RobotSpec(kind="belief", model=human, n_particles=2048),
            n_episodes=n, master_seed=master_seed, experiment_id=400 + vi,
            prefix_len=prefix_t, threads=threads,
        )
        res = engine.run_batch(cfg)
        from ..inference import encode_prefixes

        codes = encode_prefixes(res.sugg_prefix, cfg.n_arms)
        rng = SeedTree(master_seed).stream(400 + vi, 0, ROLE_ANALYSIS)
        mi, mi_se = mutual_information_bits(res.jstar, codes, rng=rng)
        mean, se = _mean_se(res.regrets)
        rows.append([policy, variant, prefix_t, mi, mi_se, mean, se])
    csvio.write_csv(Path(out_dir) / "mi.csv", csvio.SCHEMAS["mi"], rows)
    return rows


def fano_grid(master_seed: int = 0, episodes: int = 100_000, prefix_t: int = 5):
    """MI and executed-arm error at t for the fig4 grid under a cheap robot.

    Returns (policy, variant, mi, mi_se, error_rate) per pair; the Fano bound
    states mi >= (1 - error) * log2(N) - 1.
    """
    out = []
    for vi, (policy, variant, human) in enumerate(FIG4_VARIANTS):
        est, err = estimate_mi_best_arm(
            human, RobotSpec(kind="most_frequent"), "teleoperation",
            prefix_t, episodes, master_seed, horizon=prefix_t,
            experiment_id=450 + vi,
        )
        out.append((policy, variant, est.bits, est.se, err))
    return out


def table1(out_dir: Path, master_seed: int = 0, n_instances: Optional[int] = None,
           n_samples: int = 2000, threads: int = 1):
    """Posterior log-density of the true parameters under the correct model
    versus the noisy-optimality assumption, per learner.

    Returns (rows, densities) where densities maps (actual, assumed) labels to
    the per-instance log-density arrays (the paired test runs on those).
    """
    n_inst = n_instances or N_INSTANCES
    gittins = get_gittins_table(0.9)
    rows = []
    densities = {}
    actuals = list(LEARNERS) + [EPS_OPT]
    for li, actual in enumerate(actuals):
        exp = 100 + li
        cfg = BatchConfig(
            mode="inverse_solo", horizon=5, n_arms=4, human=actual,
            n_episodes=n_inst, master_seed=master_seed, experiment_id=exp,
            record_trajectories=True, threads=threads,
        )
        res = engine.run_batch(cfg)
        observations = [
            ActionOnlyObservation(tuple(int(a) for a in res.traj_h[i]), 4)
            for i in range(n_inst)
        ]
        assumed_list = [actual, EPS_OPT] if actual.kind != "epsilon_optimal" else [EPS_OPT]
        for assumed in assumed_list:
            rng = SeedTree(master_seed).stream(exp, 1, ROLE_ANALYSIS)
            sets = mh_posterior_batch(
                observations, assumed, n_samples=n_samples, rng=rng,
                gittins_table=gittins if assumed.kind == "gi" else None,
            )
            ld = np.array(
                [log_density_at(res.thetas[i], sets[i].samples) for i in range(n_inst)]
            )
            densities[(actual.label(), assumed.label())] = ld
            label = "correct" if assumed is actual else assumed.label()
            rows.append([actual.label(), label, float(ld.mean()),
                         float(ld.std(ddof=1) / math.sqrt(n_inst)), n_inst])
    csvio.write_csv(Path(out_dir) / "table1.csv", csvio.SCHEMAS["table1"], rows)
    return rows, densities


def table2(out_dir: Path, master_seed: int = 0, episodes: Optional[int] = None,
           threads: int = 1) -> list[list]:
    """Reward increase from assistance for every actual x assumed pair."""
    n = episodes or N_PARTICLE
    actual = list(LEARNERS) + [EPS_OPT]
    assumed = list(LEARNERS) + [EPS_OPT]
    rows = run_cross_model_grid(
        actual, assumed, mode="teleoperation", n_episodes=n,
        master_seed=master_seed, threads=threads,
    )
    csvio.write_csv(Path(out_dir) / "grid.csv", csvio.SCHEMAS["grid"], rows)
    return rows


def fig2_traj(out_dir: Path, master_seed: int = 0, episode_index: int = 0):
    """One preemptive episode under the explore-observe-exploit robot."""
    human = HumanSpec("epsilon_greedy", eps=0.1)
    cfg = BatchConfig(
        mode="preemptive", horizon=50, n_arms=4, human=human,
        robot=RobotSpec(kind="scripted", model=human, n_particles=2048,
                        t_explore=8, t_observe=16),
        n_episodes=1, master_seed=master_seed, experiment_id=200,
        record_trajectories=True,
    )
    res = engine.run_batch(cfg.with_(n_episodes=episode_index + 1))
    rows = []
    theta = [float(x) for x in res.thetas[episode_index]]
    for t in range(cfg.horizon):
        rows.append([episode_index, t + 1, int(res.traj_h[episode_index, t]),
                     int(res.traj_a[episode_index, t]),
                     int(res.traj_r[episode_index, t])] + theta)
    csvio.write_csv(Path(out_dir) / "trajectories.csv",
                    csvio.trajectory_header(cfg.n_arms), rows)
    return run_episode(cfg, episode_index)


def prop1_bound(theta=(0.8, 0.5, 0.5, 0.5), eps: float = 0.1) -> float:
    """Finite-regret bound for most-frequent play against an i.i.d. noisy-optimal
    human: sum over suboptimal arms of gap / (sqrt(f_best) - sqrt(f_arm))^2."""
    theta = np.asarray(theta)
    n = len(theta)
    jstar = int(np.argmax(theta))
    f = np.full(n, eps / n)
    f[jstar] += 1.0 - eps
    total = 0.0
    for i in range(n):
        if i != jstar:
            gap = theta[jstar] - theta[i]
            total += gap / (math.sqrt(f[jstar]) - math.sqrt(f[i])) ** 2
    return total


def props(out_dir: Path, master_seed: int = 0, episodes: Optional[int] = None,
          threads: int = 1) -> list[list]:
    """Property experiments; one row per measured statistic."""
    rows = []

    # finite regret under most-frequent play vs a noisy-optimal human
    n1 = episodes or N_CHEAP
    cfg1 = BatchConfig(
        mode="teleoperation", horizon=500, n_arms=4,
        human=EPS_OPT, robot=RobotSpec(kind="most_frequent"),
        theta=(0.8, 0.5, 0.5, 0.5), n_episodes=n1, master_seed=master_seed,
        experiment_id=901, record_curve=True, threads=threads,
    )
    res1 = engine.run_batch(cfg1)
    bound = prop1_bound()
    r500 = float(res1.curve[499])
    r250 = float(res1.curve[249])
    rows.append(["prop1", "mean_regret_T500", r500, bound, r500 <= bound])
    rows.append(["prop1", "regret_growth_250_500", r500 - r250, 0.05, (r500 - r250) < 0.05])

    # consistency of the decaying-exploration assist on a noisily-greedy human
    n2 = (episodes or N_PARTICLE)
    cfg2 = BatchConfig(
        mode="teleoperation", horizon=2000, n_arms=4,
        human=HumanSpec("epsilon_greedy", eps=0.1), robot=RobotSpec(kind="glie"),
        n_episodes=n2, master_seed=master_seed, experiment_id=902,
        record_curve=True, threads=threads,
    )
    res2 = engine.run_batch(cfg2)
    rate = lambda T: float(res2.curve[T - 1] / T)
    ratio = rate(2000) / rate(500)
    rows.append(["prop2", "per_round_regret_T500", rate(500), float("nan"), True])
    rows.append(["prop2", "per_round_regret_T2000", rate(2000), float("nan"), True])
    rows.append(["prop2", "rate_ratio_2000_over_500", ratio, 0.5, ratio < 0.5])
    decreasing = rate(500) > rate(1000) > rate(2000)
    rows.append(["prop2", "strictly_decreasing_checkpoints", float(decreasing), 1.0, decreasing])

    # inconsistency of the noisy-optimality assumption on the 1.5-arm bandit,
    # and the belief assistant's recovery on the same instance
    n4 = episodes or N_PARTICLE
    cfg4a = BatchConfig(
        mode="teleoperation", horizon=1000, human=GREEDY_PINNED,
        robot=RobotSpec(kind="most_frequent"), n_episodes=n4,
        master_seed=master_seed, experiment_id=904, record_curve=True,
        threads=threads, **HALF_ARM_PRIOR,
    )
    res4a = engine.run_batch(cfg4a)

    def window(curve, lo, hi):
        prev = curve[lo - 2] if lo > 1 else 0.0
        return float((curve[hi - 1] - prev) / (hi - lo + 1))

    early_a = window(res4a.curve, 1, 250)
    late_a = window(res4a.curve, 751, 1000)
    rows.append(["prop4", "mostfreq_late_over_early", late_a / early_a, 0.9,
                 late_a >= 0.9 * early_a])
    cfg4b = cfg4a.with_(
        robot=RobotSpec(kind="belief", model=GREEDY_PINNED, n_particles=512,
                        schedule=True),
        experiment_id=904,
    )
    res4b = engine.run_batch(cfg4b)
    early_b = window(res4b.curve, 1, 250)
    late_b = window(res4b.curve, 751, 1000)
    rows.append(["prop4", "belief_late_over_early", late_b / early_b, 0.5,
                 late_b < 0.5 * early_b])

    # reward decoding: the decoder robot replays the inner learner's standard
    # bandit exactly, per seed
    n5 = episodes or 10_000
    solo_cfg = BatchConfig(
        mode="solo", horizon=50, n_arms=4, human=HumanSpec("gi", gamma=0.9),
        n_episodes=n5, master_seed=master_seed, experiment_id=905,
        record_trajectories=True, threads=threads,
    )
    dec_cfg = BatchConfig(
        mode="teleoperation", horizon=50, n_arms=4, human=HumanSpec("wsls"),
        robot=RobotSpec(kind="wsls_decoder", inner=HumanSpec("gi", gamma=0.9)),
        n_episodes=n5, master_seed=master_seed, experiment_id=905,
        record_trajectories=True, threads=threads,
    )
    solo = engine.run_batch(solo_cfg)
    dec = engine.run_batch(dec_cfg)
    mismatches = int((solo.traj_a != dec.traj_a).sum())
    rows.append(["prop5", "max_executed_arm_mismatches", mismatches, 0, mismatches == 0])

    # magnitude at full scale (regrets only; the coupling already forces equality)
    n5m = episodes or N_CHEAP
    solo_m = engine.run_batch(solo_cfg.with_(n_episodes=n5m, record_trajectories=False))
    dec_m = engine.run_batch(dec_cfg.with_(n_episodes=n5m, record_trajectories=False))
    m_solo, se_solo = _mean_se(solo_m.regrets)
    m_dec, se_dec = _mean_se(dec_m.regrets)
    gap = abs(m_dec - m_solo)
    tol = 2.0 * math.hypot(se_solo, se_dec)
    rows.append(["prop5", "solo_gi_mean_regret", m_solo, float("nan"), True])
    rows.append(["prop5", "assisted_wsls_mean_regret", m_dec, float("nan"), True])
    rows.append(["prop5", "assisted_minus_solo_regret", m_dec - m_solo, tol, gap <= tol])

    csvio.write_csv(Path(out_dir) / "props.csv", csvio.SCHEMAS["props"], rows)
    return rows


def reproduce(fig_id: str, out_dir: Path, master_seed: int = 0,
              episodes: Optional[int] = None, threads: int = 1):
    if fig_id not in REPRODUCE_IDS:
        raise ValueError(f"unknown reproduce id {fig_id!r}; choose from {REPRODUCE_IDS}")
    out_dir = Path(out_dir)
    if fig_id == "table1":
        return table1(out_dir, master_seed, n_instances=episodes, threads=threads)[0]
    if fig_id == "fig3":
        return fig3(out_dir, master_seed, particle_episodes=episodes, threads=threads)
    if fig_id == "fig4":
        return fig4(out_dir, master_seed, episodes=episodes, threads=threads)
    if fig_id == "fig5":
        return fig5(out_dir, master_seed, particle_episodes=episodes, threads=threads)
    if fig_id == "table2":
        return table2(out_dir, master_seed, episodes=episodes, threads=threads)
    if fig_id == "fig2-traj":
        return fig2_traj(out_dir, master_seed)
    return props(out_dir, master_seed, episodes=episodes, threads=threads)
