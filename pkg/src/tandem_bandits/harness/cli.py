"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import engine
from ..core import ROLE_ANALYSIS, SeedTree
from ..inference import (
    ActionOnlyObservation,
    estimate_mi_best_arm,
    log_density_at,
    mh_posterior,
)
from ..specs import ConfigError, HumanSpec
from . import csvio
from .config import load_config, parse_human
from .reproduce import REPRODUCE_IDS, reproduce
from .runner import format_trajectory, run_batch_summary, run_cross_model_grid, run_episode

_GRID_POLICIES = {
    "epsilon_greedy": HumanSpec("epsilon_greedy", eps=0.1),
    "wsls": HumanSpec("wsls"),
    "ts": HumanSpec("ts", n_samples=1),
    "ucl": HumanSpec("ucl"),
    "gi": HumanSpec("gi", gamma=0.9),
    "epsilon_optimal": HumanSpec("epsilon_optimal", eps=0.1),
}


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required,
                   help="JSON experiment config")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--episodes", type=int, default=None, help="override episode count")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["master_seed"] = args.seed
    if getattr(args, "episodes", None) is not None:
        out["n_episodes"] = args.episodes
    if getattr(args, "threads", None):
        out["threads"] = args.threads
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tandem-bandits",
        description="Assistive bandit simulation, inference, and evaluation",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode and print its timeline")
    _common(p)
    p.add_argument("--episode", type=int, default=0, help="episode index to replay")

    p = sub.add_parser("batch", help="run an episode batch, write regret CSVs")
    _common(p)
    p.add_argument("--save-trajectories", action="store_true")

    p = sub.add_parser("grid", help="cross-model assistance grid")
    _common(p, config_required=False)
    p.add_argument("--actual", default="epsilon_greedy,wsls,ts,ucl,gi,epsilon_optimal")
    p.add_argument("--assumed", default="epsilon_greedy,wsls,ts,ucl,gi,epsilon_optimal")
    p.add_argument("--mode", default="teleoperation")
    p.add_argument("--particles", type=int, default=2048)

    p = sub.add_parser("inverse", help="posterior over theta from actions alone")
    _common(p)
    p.add_argument("--assumed-model", type=str, default=None,
                   help="JSON human spec to infer under (default: the config's human)")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--episode", type=int, default=0)

    p = sub.add_parser("mi", help="mutual information between best arm and actions")
    _common(p)
    p.add_argument("--prefix", type=int, default=5)

    p = sub.add_parser("reproduce", help="regenerate a figure/table CSV bundle")
    p.add_argument("id", help=f"one of {', '.join(REPRODUCE_IDS)}")
    _common(p, config_required=False)

    p = sub.add_parser("props", help="run the property experiments (alias)")
    _common(p, config_required=False)

    p = sub.add_parser("bench", help="compare compiled and pure engine lanes")
    _common(p, config_required=False)
    return ap


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, **_overrides(args))
    traj = run_episode(cfg, args.episode)
    print(format_trajectory(traj))
    if args.out is not None:
        rows = []
        theta = [float(x) for x in traj.instance.theta]
        for s in traj.steps:
            h = -1 if s.human_arm is None else s.human_arm
            rows.append([args.episode, s.t, h, s.executed_arm, s.reward] + theta)
        csvio.write_csv(args.out / "trajectories.csv",
                        csvio.trajectory_header(cfg.n_arms), rows)
    return 0


def _cmd_batch(args) -> int:
    cfg = load_config(args.config, **_overrides(args))
    summary = run_batch_summary(cfg, args.out, save_trajectories=args.save_trajectories)
    print(f"{summary.human_policy} + {summary.robot_policy} [{summary.mode}] "
          f"n={summary.n_episodes}: mean regret {summary.mean_regret:.4f} "
          f"+- {summary.se:.4f}")
    return 0


def _parse_policy_list(text: str) -> list[HumanSpec]:
    out = []
    for name in text.split(","):
        name = name.strip()
        if name not in _GRID_POLICIES:
            raise ConfigError(f"unknown grid policy {name!r}; choose from "
                              f"{sorted(_GRID_POLICIES)}")
        out.append(_GRID_POLICIES[name])
    return out


def _cmd_grid(args) -> int:
    rows = run_cross_model_grid(
        _parse_policy_list(args.actual),
        _parse_policy_list(args.assumed),
        mode=args.mode,
        n_episodes=args.episodes or 10_000,
        master_seed=args.seed or 0,
        n_particles=args.particles,
        threads=args.threads,
    )
    path = csvio.write_csv(args.out / "grid.csv", csvio.SCHEMAS["grid"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_inverse(args) -> int:
    import json

    cfg = load_config(args.config, **_overrides(args))
    if cfg.mode not in ("solo", "inverse_solo"):
        raise ConfigError("inverse inference expects a solo/inverse_solo config")
    traj = run_episode(cfg, args.episode)
    obs = ActionOnlyObservation(tuple(s.human_arm for s in traj.steps), cfg.n_arms)
    model = cfg.human if args.assumed_model is None else parse_human(json.loads(args.assumed_model))
    rng = SeedTree(cfg.master_seed).stream(cfg.experiment_id, args.episode, ROLE_ANALYSIS)
    ps = mh_posterior(obs, model, n_samples=args.samples, rng=rng)
    rows = [[i] + [float(v) for v in ps.samples[i]] for i in range(len(ps.samples))]
    header = csvio.SCHEMAS["posterior"] + [f"theta_{i}" for i in range(cfg.n_arms)]
    path = csvio.write_csv(args.out / "posterior.csv", header, rows)
    ld = log_density_at(traj.instance.theta, ps.samples)
    print(f"observed arms: {list(obs.arms)}")
    print(f"assumed model: {model.label()}  acceptance {ps.acceptance_rate:.3f}")
    print(f"posterior means: {np.round(ps.samples.mean(axis=0), 4).tolist()}")
    print(f"true theta:      {np.round(traj.instance.theta, 4).tolist()}")
    print(f"log-density of true theta: {ld:.4f}")
    print(f"wrote {path}")
    return 0


def _cmd_mi(args) -> int:
    cfg = load_config(args.config, **_overrides(args))
    rows = []
    for t in range(1, args.prefix + 1):
        est, err = estimate_mi_best_arm(
            cfg.human, cfg.robot, cfg.mode, t,
            cfg.n_episodes, cfg.master_seed, horizon=max(cfg.horizon, t),
            n_arms=cfg.n_arms, experiment_id=cfg.experiment_id,
        )
        rows.append([cfg.human.label(), cfg.robot.label(), t, est.bits, est.se,
                     float("nan"), float("nan")])
        print(f"t={t}: MI {est.bits:.4f} +- {est.se:.4f} bits "
              f"(executed-arm error at t: {err:.4f})")
    path = csvio.write_csv(args.out / "mi.csv", csvio.SCHEMAS["mi"], rows)
    print(f"wrote {path}")
    return 0


def _cmd_reproduce(args, fig_id=None) -> int:
    fig_id = fig_id or args.id
    if fig_id not in REPRODUCE_IDS:
        raise ConfigError(f"unknown reproduce id {fig_id!r}; choose from {REPRODUCE_IDS}")
    rows = reproduce(fig_id, args.out, master_seed=args.seed or 0,
                     episodes=args.episodes, threads=args.threads)
    print(f"reproduced {fig_id} -> {args.out}")
    if fig_id == "props":
        for row in rows:
            status = "pass" if row[4] else "FAIL"
            print(f"  [{status}] {row[0]} {row[1]} = {row[2]:.6g} (bound {row[3]})")
    return 0


def _cmd_bench(args) -> int:
    from ..benchmarks import run_benchmarks

    run_benchmarks(n_episodes=args.episodes or 500, master_seed=args.seed or 0)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "batch":
            return _cmd_batch(args)
        if args.command == "grid":
            return _cmd_grid(args)
        if args.command == "inverse":
            return _cmd_inverse(args)
        if args.command == "mi":
            return _cmd_mi(args)
        if args.command == "reproduce":
            return _cmd_reproduce(args)
        if args.command == "props":
            return _cmd_reproduce(args, fig_id="props")
        if args.command == "bench":
            return _cmd_bench(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # runtime failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
