"""Batch episode engine with two interchangeable lanes.

The compiled lane (Cython, ``_kernels``) and the pure lane
(:mod:`.reference`) implement the same per-round protocol against the same
PCG64 streams and produce bit-identical trajectories; the compiled lane is
simply faster.  Selection is automatic at import, can be pinned per batch via
``BatchConfig.backend``, and globally via the ``TANDEM_BANDITS_BACKEND``
environment variable ("pure" or "compiled").

Batches are split into fixed-size episode blocks merged in block order, so
results are byte-identical for any ``threads`` value.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from ..specs import BatchConfig, BatchResult, ConfigError
from . import reference
from .tables import TableSet, build_tables

_FORCE_ENV = "TANDEM_BANDITS_BACKEND"

try:
    from . import fast as _fast

    HAVE_COMPILED = _fast.AVAILABLE
except ImportError:  # extension not built
    _fast = None
    HAVE_COMPILED = False

__all__ = ["run_batch", "backend_name", "HAVE_COMPILED"]


def backend_name() -> str:
    forced = os.environ.get(_FORCE_ENV)
    if forced == "pure":
        return "pure"
    return "compiled" if HAVE_COMPILED else "pure"


def _compiled_supported(cfg: BatchConfig) -> bool:
    if cfg.n_arms > 16:
        return False
    if cfg.robot.kind == "belief" or (
        cfg.robot.kind == "scripted" and cfg.robot.model is not None
    ):
        model = cfg.robot.model
        if model.kind == "ts" and model.n_samples is not None and model.n_samples > 1:
            pass  # normal-approximation tables cover finite n >= 2
    return True


def _lane_for(cfg: BatchConfig) -> str:
    forced = os.environ.get(_FORCE_ENV)
    want = forced if forced in ("pure", "compiled") else cfg.backend
    if want == "pure":
        return "pure"
    if want == "compiled":
        if not HAVE_COMPILED:
            raise ConfigError("compiled engine requested but the extension is not built")
        return "compiled"
    return "compiled" if HAVE_COMPILED and _compiled_supported(cfg) else "pure"


def _run_block(args) -> dict:
    cfg, lo, hi, lane, tables = args
    if lane == "compiled":
        return _fast.run_block_compiled(cfg, lo, hi, tables)
    return reference.run_block_reference(cfg, lo, hi, tables)


def run_batch(cfg: BatchConfig) -> BatchResult:
    cfg.validate()
    lane = _lane_for(cfg)
    tables = build_tables(cfg)

    E = cfg.n_episodes
    bs = max(1, cfg.block_size)
    blocks = [(lo, min(lo + bs, E)) for lo in range(0, E, bs)]
    tasks = [(cfg, lo, hi, lane, tables) for lo, hi in blocks]

    if cfg.threads > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(processes=cfg.threads) as pool:
            parts = pool.map(_run_block, tasks)
    else:
        parts = [_run_block(t) for t in tasks]

    def _cat(key):
        if parts[0][key] is None:
            return None
        return np.concatenate([p[key] for p in parts], axis=0)

    curve = None
    if cfg.record_curve:
        curve = np.zeros(cfg.horizon)
        for p in parts:  # merged in block order for parallelism-independent bytes
            curve += p["curve"]
        curve /= E

    return BatchResult(
        regrets=_cat("regrets"),
        jstar=_cat("jstar"),
        backend=lane,
        curve=curve,
        sugg_prefix=_cat("sugg_prefix"),
        exec_prefix=_cat("exec_prefix"),
        traj_h=_cat("traj_h"),
        traj_a=_cat("traj_a"),
        traj_r=_cat("traj_r"),
        thetas=_cat("thetas"),
        degeneracy_events=sum(p["degeneracy"] for p in parts),
    )
