"""Per-batch lookup tables shared by the pure and compiled engine lanes.

Everything that needs scipy special functions (Beta pdfs/CDFs, quantiles,
normal CDFs) is evaluated once here, so the two lanes consume identical
float64 values and the compiled kernel stays free of Python callbacks.

All tables assume the modeled human starts from the uniform Beta(1, 1) prior;
indices are raw observation counts (pulls p, successes s <= p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special as sps
from scipy import stats as st

from ..gittins import GittinsTable, get_gittins_table
from ..specs import BatchConfig, HumanSpec

__all__ = ["TableSet", "build_tables", "TS1_NODES", "TSN_NODES"]

TS1_NODES = 32  # exact for horizons <= 60 (polynomial degree t + n_arms - 2)
TSN_NODES = 48
TSN_LO, TSN_HI = -0.25, 1.25  # mean-of-n normal approximation support


def _unit_gl(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return (x + 1.0) / 2.0, w / 2.0


def _interval_gl(n_nodes: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    half = (hi - lo) / 2.0
    return lo + (x + 1.0) * half, w * half


@dataclass
class TableSet:
    horizon: int
    n_arms: int
    ts1_x: Optional[np.ndarray] = None
    ts1_w: Optional[np.ndarray] = None
    ts1_pdf: Optional[np.ndarray] = None  # (T+1, T+1, Q) by (pulls, succ)
    ts1_cdf: Optional[np.ndarray] = None
    tsn: dict = field(default_factory=dict)  # n -> (x, w, pdf, cdf)
    ucl_q: dict = field(default_factory=dict)  # K -> (T+1, T+1, T+1) by (t, pulls, succ)
    gittins: dict = field(default_factory=dict)  # gamma -> GittinsTable

    # -- builders ----------------------------------------------------------
    def ensure_ts1(self) -> None:
        if self.ts1_pdf is not None:
            return
        T = self.horizon
        x, w = _unit_gl(TS1_NODES)
        pdf = np.zeros((T + 1, T + 1, TS1_NODES))
        cdf = np.zeros((T + 1, T + 1, TS1_NODES))
        for p in range(T + 1):
            s = np.arange(p + 1)
            a = 1.0 + s
            b = 1.0 + p - s
            logpdf = (
                (a[:, None] - 1.0) * np.log(x)[None, :]
                + (b[:, None] - 1.0) * np.log1p(-x)[None, :]
                - sps.betaln(a, b)[:, None]
            )
            pdf[p, : p + 1] = np.exp(logpdf)
            cdf[p, : p + 1] = sps.betainc(a[:, None], b[:, None], x[None, :])
        self.ts1_x, self.ts1_w, self.ts1_pdf, self.ts1_cdf = x, w, pdf, cdf

    def ensure_tsn(self, n: int) -> None:
        if n in self.tsn:
            return
        T = self.horizon
        x, w = _interval_gl(TSN_NODES, TSN_LO, TSN_HI)
        pdf = np.zeros((T + 1, T + 1, TSN_NODES))
        cdf = np.zeros((T + 1, T + 1, TSN_NODES))
        for p in range(T + 1):
            s = np.arange(p + 1)
            a = 1.0 + s
            b = 1.0 + p - s
            mu = a / (a + b)
            var = a * b / ((a + b) ** 2 * (a + b + 1.0))
            sd = np.sqrt(var / n)
            z = (x[None, :] - mu[:, None]) / sd[:, None]
            pdf[p, : p + 1] = st.norm.pdf(z) / sd[:, None]
            cdf[p, : p + 1] = st.norm.cdf(z)
        self.tsn[n] = (x, w, pdf, cdf)

    def ensure_ucl(self, K: float) -> None:
        if K in self.ucl_q:
            return
        T = self.horizon
        q = np.zeros((T + 1, T + 1, T + 1))
        for t in range(1, T + 1):
            level = 1.0 - 1.0 / (K * t)
            level = min(max(level, 0.5), 1.0 - 1e-12)
            for p in range(T + 1):
                s = np.arange(p + 1)
                q[t, p, : p + 1] = sps.betaincinv(1.0 + s, 1.0 + p - s, level)
        self.ucl_q[K] = q

    def ensure_gittins(self, gamma: float) -> None:
        if gamma in self.gittins:
            return
        cap = max(200, self.horizon + 2)
        self.gittins[gamma] = get_gittins_table(gamma, cap=cap)

    def ensure_for_spec(self, spec: Optional[HumanSpec]) -> None:
        if spec is None:
            return
        if spec.kind == "ts":
            if spec.n_samples == 1:
                self.ensure_ts1()
            elif spec.n_samples is not None and spec.n_samples >= 2:
                self.ensure_tsn(spec.n_samples)
        elif spec.kind == "ucl":
            self.ensure_ucl(spec.K)
        elif spec.kind == "gi":
            self.ensure_gittins(spec.gamma)

    # -- accessors ---------------------------------------------------------
    def gittins_for(self, spec: HumanSpec) -> GittinsTable:
        self.ensure_gittins(spec.gamma)
        return self.gittins[spec.gamma]


def build_tables(cfg: BatchConfig) -> TableSet:
    """Tables required by the batch's human, decoder-inner, and belief-model specs."""
    tables = TableSet(horizon=cfg.horizon, n_arms=cfg.n_arms)
    tables.ensure_for_spec(cfg.human)
    tables.ensure_for_spec(cfg.robot.inner)
    # belief models always need their likelihood tables; scripted exploits need none
    if cfg.robot.kind == "belief":
        tables.ensure_for_spec(cfg.robot.model)
    elif cfg.robot.kind == "scripted" and cfg.robot.model is not None:
        tables.ensure_for_spec(cfg.robot.model)
    return tables
