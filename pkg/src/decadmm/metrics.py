"""Run measurements: accuracy, consensus error, rewards, Lyapunov value.

All optimizers emit the same record schema so their curves are directly
comparable; unavailable fields stay ``None`` and serialize as empty CSV
cells. Communication is counted in transmitted real scalars: a token hop
costs ``dim`` scalars per carried vector, a gossip round costs
``2 |E| * dim`` (one vector each way per edge).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "MetricsRecord",
    "DegenerateInit",
    "NotAvailable",
    "accuracy",
    "consensus_error",
    "lyapunov_value",
    "moving_average",
    "avg_reward",
    "records_to_csv",
    "records_from_csv",
    "aggregate_records",
]

CSV_FIELDS = (
    "k",
    "comm_scalars",
    "accuracy",
    "consensus_error",
    "avg_reward",
    "lyapunov",
    "wall_time_s",
)


class DegenerateInit(ValueError):
    """An agent started exactly at the reference optimum."""


class NotAvailable(RuntimeError):
    """The requested metric is not defined for these objectives."""


@dataclass(frozen=True)
class MetricsRecord:
    """One per-iteration sample; immutable value object."""

    k: int
    comm_scalars: int
    accuracy: float | None = None
    consensus_error: float | None = None
    avg_reward: float | None = None
    lyapunov: float | None = None
    wall_time_s: float = 0.0


def accuracy(
    thetas_k: np.ndarray, thetas_0: np.ndarray, theta_star: np.ndarray
) -> float:
    """Mean squared distance to the optimum, relative to the start.

    ``mean_i ||theta_i^k - theta*||^2 / ||theta_i^0 - theta*||^2``; zero
    means every agent sits on the optimum, one means no progress.
    """
    thetas_k = np.atleast_2d(thetas_k)
    thetas_0 = np.atleast_2d(thetas_0)
    denom = np.sum((thetas_0 - theta_star) ** 2, axis=1)
    if np.any(np.sqrt(denom) < 1e-12):
        raise DegenerateInit("an agent was initialized at theta*")
    num = np.sum((thetas_k - theta_star) ** 2, axis=1)
    return float(np.mean(num / denom))


def consensus_error(thetas: np.ndarray) -> float:
    """Mean squared deviation of the agents' parameters from their average."""
    thetas = np.atleast_2d(thetas)
    center = thetas.mean(axis=0)
    return float(np.mean(np.sum((thetas - center) ** 2, axis=1)))


def lyapunov_value(
    thetas: np.ndarray,
    lambdas: np.ndarray,
    z: np.ndarray,
    rho: float,
    objectives,
) -> float:
    """Augmented-Lagrangian value of the current consensus state.

    ``sum_i f_i(theta_i) + <lambda_i, z - theta_i> + rho/2 ||z - theta_i||^2``
    using exact full losses; only defined for objectives with a ``loss``.
    """
    total = 0.0
    for theta, lam, obj in zip(np.atleast_2d(thetas), np.atleast_2d(lambdas), objectives):
        if not hasattr(obj, "loss"):
            raise NotAvailable("objective has no exact loss; monitor is regression-only")
        resid = z - theta
        total += obj.loss(theta) + float(lam @ resid) + 0.5 * rho * float(resid @ resid)
    return total


def moving_average(values, window: int) -> np.ndarray:
    """Trailing moving average; shorter prefixes average what exists."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    csum = np.cumsum(values)
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out[i] = (csum[i] - (csum[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


def avg_reward(agent_returns, window: int = 1) -> np.ndarray:
    """Globally averaged reward series, smoothed over a trailing window.

    ``agent_returns`` is (iterations, agents); rows are averaged across
    agents first, then smoothed. Aggregation across Monte-Carlo seeds
    happens at plot time.
    """
    arr = np.atleast_2d(np.asarray(agent_returns, dtype=float))
    per_iter = arr.mean(axis=1)
    if window <= 1:
        return per_iter
    return moving_average(per_iter, window)


def _cell(value) -> str:
    return "" if value is None else repr(float(value))


def records_to_csv(records: list[MetricsRecord], path, include_wall_time=False) -> None:
    """Write the record series; wall time is left blank by default so that
    reruns of the same (config, seed) produce byte-identical files."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.k,
                    r.comm_scalars,
                    _cell(r.accuracy),
                    _cell(r.consensus_error),
                    _cell(r.avg_reward),
                    _cell(r.lyapunov),
                    repr(r.wall_time_s) if include_wall_time else "",
                ]
            )


def records_from_csv(path) -> list[MetricsRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"unexpected metrics header {header!r}")
        for row in reader:
            out.append(
                MetricsRecord(
                    k=int(row[0]),
                    comm_scalars=int(row[1]),
                    accuracy=float(row[2]) if row[2] else None,
                    consensus_error=float(row[3]) if row[3] else None,
                    avg_reward=float(row[4]) if row[4] else None,
                    lyapunov=float(row[5]) if row[5] else None,
                    wall_time_s=float(row[6]) if row[6] else 0.0,
                )
            )
    return out


def aggregate_records(per_seed: list[list[MetricsRecord]]):
    """Median and min/max band across seeds, aligned by record position.

    Returns a list of dicts (one per aligned position) with, for every
    optional metric, ``<name>_median`` / ``<name>_min`` / ``<name>_max``.
    """
    if not per_seed:
        return []
    n = min(len(series) for series in per_seed)
    rows = []
    # wall time is excluded: it differs between reruns by nature
    value_fields = [
        f.name for f in fields(MetricsRecord) if f.name not in ("k", "wall_time_s")
    ]
    for pos in range(n):
        row = {"k": per_seed[0][pos].k}
        for name in value_fields:
            vals = [getattr(series[pos], name) for series in per_seed]
            if any(v is None for v in vals):
                continue
            arr = np.asarray(vals, dtype=float)
            row[f"{name}_median"] = float(np.median(arr))
            row[f"{name}_min"] = float(arr.min())
            row[f"{name}_max"] = float(arr.max())
        rows.append(row)
    return rows
