"""CSV emission: fixed schemas, header row mandatory, RFC-4180 quoting, UTF-8.

Numbers are formatted with repr (shortest round-trip), so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

SCHEMAS = {
    "trajectories": ["episode", "t", "human_arm", "executed_arm", "reward"],  # + theta_i
    "regret": ["human_policy", "robot_policy", "mode", "n_episodes", "mean_regret", "se"],
    "regret_curve": ["human_policy", "robot_policy", "t", "mean_cum_regret"],
    "table1": ["actual_policy", "assumed_policy", "mean_logdensity", "se", "n"],
    "mi": ["policy", "variant", "prefix_t", "mi_bits", "mi_se", "assisted_regret", "regret_se"],
    "grid": ["actual_policy", "assumed_policy", "mode", "reward_delta", "se"],
    "props": ["prop", "metric", "value", "bound", "ok"],
    "posterior": ["sample"],  # + theta_i
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def trajectory_header(n_arms: int) -> list[str]:
    return SCHEMAS["trajectories"] + [f"theta_{i}" for i in range(n_arms)]


def trajectory_rows(result, n_arms: int) -> list[list]:
    """Rows from a BatchResult carrying full trajectories; -1 marks no suggestion."""
    rows = []
    E, T = result.traj_a.shape
    for ep in range(E):
        theta = [float(x) for x in result.thetas[ep]]
        for t in range(T):
            rows.append(
                [ep, t + 1, int(result.traj_h[ep, t]), int(result.traj_a[ep, t]),
                 int(result.traj_r[ep, t])] + theta
            )
    return rows
