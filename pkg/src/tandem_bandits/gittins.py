"""Gittins indices for Beta-Bernoulli arms under geometric discounting.

The index of a state (alpha, beta) is the retirement rate lam at which an
agent is indifferent between retiring (collecting lam forever, worth
lam/(1-gamma)) and pulling the arm at least once more with the option to
retire later.  We find it by bisection on lam, evaluating the continuation
value with a truncated dynamic program whose depth is chosen so that
gamma**depth < tolerance.

Tables are expensive to build (quadratic state count times a quadratic DP per
state), so they are cached on disk as plain text and computed by the compiled
kernel when available.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = ["GittinsTable", "compute_gittins_table", "get_gittins_table", "default_cache_dir"]

_CACHE_ENV = "TANDEM_BANDITS_CACHE"


def default_cache_dir() -> Path:
    env = os.environ.get(_CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tandem_bandits"


def truncation_depth(gamma: float, tolerance: float) -> int:
    return max(2, int(math.ceil(math.log(tolerance) / math.log(gamma))))


@dataclass
class GittinsTable:
    """Dense index table over integer Beta states with alpha + beta <= cap.

    ``values[a, b]`` holds the index for state (a, b); entries outside the
    triangle are NaN.  States beyond the cap fall back to the posterior mean
    at lookup time (documented approximation).
    """

    gamma: float
    cap: int
    tolerance: float
    values: np.ndarray

    def index(self, alpha: int, beta: int) -> float:
        if alpha >= 1 and beta >= 1 and alpha + beta <= self.cap:
            return float(self.values[alpha, beta])
        return alpha / (alpha + beta)

    def check_monotonicity(self) -> bool:
        """index(a+1,b) > index(a,b) and index(a,b+1) < index(a,b) for stored states."""
        for a in range(1, self.cap):
            for b in range(1, self.cap):
                if a + b + 1 > self.cap:
                    break
                v = self.values[a, b]
                if not (self.values[a + 1, b] > v and self.values[a, b + 1] < v):
                    return False
        return True

    def save(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# tandem-bandits gittins index table v1\n")
            fh.write(f"# gamma={self.gamma!r} cap={self.cap} tolerance={self.tolerance!r}\n")
            fh.write("# columns: alpha beta index\n")
            for a in range(1, self.cap):
                for b in range(1, self.cap + 1 - a):
                    fh.write(f"{a} {b} {float(self.values[a, b])!r}\n")

    @classmethod
    def load(cls, path: Path) -> "GittinsTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if "gittins index table v1" not in header:
                raise ValueError(f"{path}: not a gittins table file")
            meta = fh.readline().lstrip("# ").split()
            kv = dict(item.split("=", 1) for item in meta)
            gamma = float(kv["gamma"])
            cap = int(kv["cap"])
            tolerance = float(kv["tolerance"])
            fh.readline()
            values = np.full((cap + 1, cap + 1), np.nan)
            for line in fh:
                a_s, b_s, v_s = line.split()
                values[int(a_s), int(b_s)] = float(v_s)
        return cls(gamma=gamma, cap=cap, tolerance=tolerance, values=values)


def _continuation_value(alpha: int, beta: int, lam: float, gamma: float, depth: int) -> float:
    """Value of pulling once from (alpha, beta), retiring optimally afterwards."""
    retire = lam / (1.0 - gamma)
    v = np.full(depth + 1, retire)
    for d in range(depth - 1, 0, -1):
        i = np.arange(d + 1)
        mu = (alpha + i) / (alpha + beta + d)
        pull = mu + gamma * (mu * v[1 : d + 2] + (1.0 - mu) * v[: d + 1])
        v = np.maximum(retire, pull)
    mu0 = alpha / (alpha + beta)
    return float(mu0 + gamma * (mu0 * v[1] + (1.0 - mu0) * v[0]))


def _solve_index_pure(alpha: int, beta: int, gamma: float, tolerance: float, depth: int) -> float:
    lo = alpha / (alpha + beta)
    hi = 1.0
    retire_scale = 1.0 / (1.0 - gamma)
    while hi - lo > tolerance:
        lam = 0.5 * (lo + hi)
        if _continuation_value(alpha, beta, lam, gamma, depth) > lam * retire_scale:
            lo = lam
        else:
            hi = lam
    return 0.5 * (lo + hi)


def compute_gittins_table(
    gamma: float, cap: int = 200, tolerance: float = 1e-6, backend: str = "auto"
) -> GittinsTable:
    """Index table for all integer states with alpha + beta <= cap.

    ``backend`` is "auto" (compiled kernel when available), "compiled", or
    "pure".  Values agree to within the bisection tolerance either way.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if cap < 2:
        raise ValueError("cap must be at least 2")
    depth = truncation_depth(gamma, tolerance)
    values = None
    if backend in ("auto", "compiled"):
        try:
            from tandem_bandits.engine import _kernels

            values = _kernels.gittins_solve(gamma, cap, tolerance, depth)
        except ImportError:
            if backend == "compiled":
                raise
    if values is None:
        values = np.full((cap + 1, cap + 1), np.nan)
        for a in range(1, cap):
            for b in range(1, cap + 1 - a):
                values[a, b] = _solve_index_pure(a, b, gamma, tolerance, depth)
    return GittinsTable(gamma=gamma, cap=cap, tolerance=tolerance, values=values)


def get_gittins_table(
    gamma: float = 0.9,
    cap: int = 200,
    tolerance: float = 1e-6,
    cache_dir: Optional[Path] = None,
) -> GittinsTable:
    """Load the cached table for (gamma, cap, tolerance), computing it on a miss."""
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    name = f"gittins_g{gamma!r}_c{cap}_t{tolerance!r}.txt"
    path = cache_dir / name
    if path.exists():
        table = GittinsTable.load(path)
        if table.gamma == gamma and table.cap == cap and table.tolerance == tolerance:
            return table
    table = compute_gittins_table(gamma, cap, tolerance)
    table.save(path)
    return table
