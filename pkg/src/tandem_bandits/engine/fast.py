"""Marshalling layer between BatchConfig and the compiled kernel."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..specs import BatchConfig, HumanSpec
from .tables import TableSet

try:
    from . import _kernels

    AVAILABLE = True
except ImportError:
    _kernels = None
    AVAILABLE = False

_HUMAN_CODE = {
    "epsilon_greedy": 0,
    "wsls": 1,
    "communicative": 2,
    "epsilon_optimal": 3,
    "ts": 4,
    "ucl": 5,
    "gi": 6,
}
_ROBOT_CODE = {
    "none": 0,
    "copy": 1,
    "most_frequent": 2,
    "glie": 3,
    "wsls_decoder": 4,
    "communicative_decoder": 5,
    "scripted": 6,
    "belief": 7,
}
_MODE_CODE = {
    "solo": 0,
    "inverse_solo": 0,
    "teleoperation": 1,
    "turn_taking": 2,
    "preemptive": 3,
}

_DUMMY3 = np.zeros((1, 1, 1))
_DUMMY2 = np.zeros((1, 1))
_DUMMY_W = np.zeros(1)


def _learner_args(spec: Optional[HumanSpec], n_arms: int, tables: TableSet):
    """(kind, eps, nsamp, scale, tie_lowest, pinned, ucl_q, gittins, gcap)"""
    if spec is None:
        spec = HumanSpec(kind="wsls")  # inert placeholder, never driven
    kind = _HUMAN_CODE[spec.kind]
    nsamp = 0 if spec.n_samples is None else int(spec.n_samples)
    scale = 0.0
    ucl_q = _DUMMY3
    gittins = _DUMMY2
    gcap = 0
    if spec.kind == "ucl":
        scale = spec.tau if spec.tau_role == "multiply" else 1.0 / spec.tau
        ucl_q = tables.ucl_q[spec.K]
    if spec.kind == "gi":
        table = tables.gittins[spec.gamma]
        gittins = table.values
        gcap = table.cap
    pinned = np.full(n_arms, np.nan)
    if spec.pinned_means is not None:
        for j, v in enumerate(spec.pinned_means):
            if v is not None:
                pinned[j] = v
    tie_lowest = 1 if spec.tie_break == "lowest" else 0
    return kind, float(spec.eps), nsamp, scale, tie_lowest, pinned, ucl_q, gittins, gcap


def _model_filter(cfg: BatchConfig, tables: TableSet):
    spec = cfg.robot.model
    if spec is None or cfg.robot.kind not in ("belief", "scripted"):
        return None
    kind, eps, nsamp, scale, tie_lowest, pinned, ucl_q, gittins, gcap = _learner_args(
        spec, cfg.n_arms, tables
    )
    ts_pdf, ts_cdf, ts_w = _DUMMY3, _DUMMY3, _DUMMY_W
    if spec.kind == "ts" and spec.n_samples == 1:
        ts_pdf, ts_cdf, ts_w = tables.ts1_pdf, tables.ts1_cdf, tables.ts1_w
    elif spec.kind == "ts" and spec.n_samples is not None and spec.n_samples >= 2:
        _, ts_w, ts_pdf, ts_cdf = tables.tsn[spec.n_samples]
    return _kernels.make_filter(
        kind,
        cfg.n_arms,
        cfg.robot.n_particles,
        eps,
        nsamp,
        scale,
        tie_lowest,
        list(pinned),
        cfg.robot.ess_frac,
        ts_pdf,
        ts_cdf,
        ts_w,
        ucl_q,
        gittins,
        gcap,
    )


def run_block_compiled(cfg: BatchConfig, lo: int, hi: int, tables: TableSet) -> dict:
    E = hi - lo
    T = cfg.horizon
    N = cfg.n_arms
    k = cfg.prefix_len
    prior = cfg.prior()

    theta_fixed = (
        np.asarray(cfg.theta, dtype=np.float64) if cfg.theta is not None else np.empty(0)
    )
    h_args = _learner_args(cfg.human, N, tables)
    i_args = _learner_args(cfg.robot.inner, N, tables)
    pf = _model_filter(cfg, tables)

    regrets = np.zeros(E)
    jstar = np.zeros(E, dtype=np.int8)
    curve = np.zeros(T if cfg.record_curve else 0)
    sugg_prefix = np.full((E, k) if k else (0, 0), -1, dtype=np.int8)
    exec_prefix = np.full((E, k) if k else (0, 0), -1, dtype=np.int8)
    shape_traj = (E, T) if cfg.record_trajectories else (0, 0)
    traj_h = np.full(shape_traj, -1, dtype=np.int8)
    traj_a = np.zeros(shape_traj, dtype=np.int8)
    traj_r = np.zeros(shape_traj, dtype=np.int8)
    thetas = np.zeros((E, N) if cfg.record_trajectories else (0, 0))

    degeneracy = _kernels.run_block(
        _MODE_CODE[cfg.mode],
        T,
        N,
        lo,
        hi,
        cfg.master_seed,
        cfg.experiment_id,
        prior.alpha.astype(np.float64),
        prior.beta.astype(np.float64),
        prior.fixed_array(),
        theta_fixed,
        h_args[0], h_args[1], h_args[2], h_args[3], h_args[4], h_args[5],
        h_args[6], h_args[7], h_args[8],
        _ROBOT_CODE[cfg.robot.kind],
        1 if cfg.robot.schedule else 0,
        cfg.robot.trust,
        cfg.robot.t_explore,
        cfg.robot.t_observe,
        i_args[0], i_args[1], i_args[2], i_args[3], i_args[4], i_args[5],
        i_args[6], i_args[7], i_args[8],
        pf,
        regrets,
        jstar,
        curve,
        sugg_prefix,
        exec_prefix,
        traj_h,
        traj_a,
        traj_r,
        thetas,
    )

    return {
        "regrets": regrets,
        "jstar": jstar,
        "curve": curve if cfg.record_curve else None,
        "sugg_prefix": sugg_prefix if k else None,
        "exec_prefix": exec_prefix if k else None,
        "traj_h": traj_h if cfg.record_trajectories else None,
        "traj_a": traj_a if cfg.record_trajectories else None,
        "traj_r": traj_r if cfg.record_trajectories else None,
        "thetas": thetas if cfg.record_trajectories else None,
        "degeneracy": degeneracy,
    }
