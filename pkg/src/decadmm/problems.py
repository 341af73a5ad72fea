"""Synthetic regression problems: data generation, losses, gradients.

Two objective families are provided. Least squares uses the mean squared
residual ``mean((x @ theta - t)^2)`` per agent; logistic regression uses the
mean logistic loss ``mean(log(1 + exp(-t * (x @ theta))))`` with labels in
{-1, +1}. Both expose full and mini-batch gradients through the common
objective interface consumed by the optimizers, plus a centralized solver
that produces the reference optimum for the accuracy metric.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RegressionDataset",
    "GroundTruth",
    "RegressionObjective",
    "synthesize_ridge",
    "synthesize_logistic",
    "ridge_loss",
    "ridge_gradient",
    "logistic_loss",
    "logistic_gradient",
    "centralized_solve",
    "datasets_to_csv",
    "datasets_from_csv",
]


@dataclass(frozen=True)
class RegressionDataset:
    """One agent's local samples: feature rows and scalar targets."""

    inputs: np.ndarray
    targets: np.ndarray
    owner: int = 0

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.targets.ndim != 1:
            raise ValueError("inputs must be (n, dim), targets (n,)")
        if len(self.inputs) != len(self.targets) or len(self.inputs) < 1:
            raise ValueError("inputs and targets must have equal length >= 1")

    @property
    def n_samples(self) -> int:
        return len(self.targets)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """Generating parameter and the noise level used to synthesize targets."""

    theta_star: np.ndarray
    noise_sigma: float = 0.0


def synthesize_ridge(
    n_agents: int,
    samples_per_agent: int,
    dim: int = 10,
    noise_sigma: float = 0.1,
    seed: int = 0,
) -> tuple[list[RegressionDataset], GroundTruth]:
    """Linear data ``t = theta* . o + e`` with standard normal features.

    The generating parameter and features are standard normal draws; ``e`` is
    zero-mean Gaussian noise with standard deviation ``noise_sigma``.
    """
    if n_agents < 1 or samples_per_agent < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    theta_star = rng.standard_normal(dim)
    datasets = []
    for i in range(n_agents):
        x = rng.standard_normal((samples_per_agent, dim))
        noise = noise_sigma * rng.standard_normal(samples_per_agent)
        datasets.append(RegressionDataset(x, x @ theta_star + noise, owner=i))
    return datasets, GroundTruth(theta_star, noise_sigma)


def synthesize_logistic(
    n_agents: int,
    samples_per_agent: int,
    dim: int = 2,
    seed: int = 0,
) -> tuple[list[RegressionDataset], GroundTruth]:
    """Binary labels drawn with probability ``sigmoid(theta* . o)`` for +1."""
    if n_agents < 1 or samples_per_agent < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    theta_star = rng.standard_normal(dim)
    datasets = []
    for i in range(n_agents):
        x = rng.standard_normal((samples_per_agent, dim))
        v = rng.uniform(size=samples_per_agent)
        t = np.where(v <= _sigmoid(x @ theta_star), 1.0, -1.0)
        datasets.append(RegressionDataset(x, t, owner=i))
    return datasets, GroundTruth(theta_star, 0.0)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    # exp(-|a|) never overflows; both branches are the same function.
    out = np.empty_like(a, dtype=float)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def ridge_loss(theta, inputs, targets, l2: float = 0.0) -> float:
    resid = inputs @ theta - targets
    return float(np.mean(resid**2) + l2 * theta @ theta)


def ridge_gradient(theta, inputs, targets, l2: float = 0.0) -> np.ndarray:
    if len(targets) == 0:
        raise ValueError("empty batch")
    resid = inputs @ theta - targets
    return (2.0 / len(targets)) * (inputs.T @ resid) + 2.0 * l2 * theta


def logistic_loss(theta, inputs, targets, l2: float = 0.0) -> float:
    margins = targets * (inputs @ theta)
    # log(1 + exp(-m)) == logaddexp(0, -m), stable for large |m|.
    return float(np.mean(np.logaddexp(0.0, -margins)) + l2 * theta @ theta)


def logistic_gradient(theta, inputs, targets, l2: float = 0.0) -> np.ndarray:
    if len(targets) == 0:
        raise ValueError("empty batch")
    margins = targets * (inputs @ theta)
    coeff = -targets * _sigmoid(-margins)
    return (inputs.T @ coeff) / len(targets) + 2.0 * l2 * theta


class RegressionObjective:
    """Per-agent objective over one local dataset.

    ``stochastic_gradient`` draws a mini-batch uniformly with replacement;
    a batch size of ``None`` or anything at least the dataset size means the
    full dataset is used deterministically (no randomness consumed), which is
    what makes the full-batch reduction of the stochastic optimizers exact.
    """

    def __init__(self, kind: str, data: RegressionDataset, l2: float = 0.0):
        if kind not in ("ridge", "logistic"):
            raise ValueError(f"unknown problem kind {kind!r}")
        self.kind = kind
        self.data = data
        self.l2 = l2
        self._grad = ridge_gradient if kind == "ridge" else logistic_gradient
        self._loss = ridge_loss if kind == "ridge" else logistic_loss

    @property
    def dim(self) -> int:
        return self.data.dim

    def stochastic_gradient(
        self, theta: np.ndarray, batch_size: int | None, rng: np.random.Generator
    ) -> tuple[np.ndarray, int]:
        n = self.data.n_samples
        if batch_size is None or batch_size >= n:
            return self.full_gradient(theta), n
        idx = rng.integers(0, n, size=batch_size)
        g = self._grad(theta, self.data.inputs[idx], self.data.targets[idx], self.l2)
        return g, batch_size

    def full_gradient(self, theta: np.ndarray) -> np.ndarray:
        return self._grad(theta, self.data.inputs, self.data.targets, self.l2)

    def loss(self, theta: np.ndarray) -> float:
        return self._loss(theta, self.data.inputs, self.data.targets, self.l2)


def centralized_solve(
    kind: str,
    datasets: list[RegressionDataset],
    l2: float = 0.0,
    tol: float = 1e-10,
    max_iters: int = 100_000,
) -> np.ndarray:
    """Reference optimum of the pooled objective ``sum_i mean_i(loss)``.

    Least squares is solved exactly through the normal equations (each
    agent's term weighted by ``1/n_i`` to match the per-agent mean losses).
    Logistic regression runs full-batch gradient descent with backtracking
    until the gradient norm drops below ``tol``.
    """
    if not datasets:
        raise ValueError("pooled data is empty")
    dim = datasets[0].dim
    if kind == "ridge":
        a = np.zeros((dim, dim))
        b = np.zeros(dim)
        for d in datasets:
            a += (2.0 / d.n_samples) * (d.inputs.T @ d.inputs)
            b += (2.0 / d.n_samples) * (d.inputs.T @ d.targets)
        a += 2.0 * l2 * len(datasets) * np.eye(dim)
        try:
            if np.linalg.cond(a) > 1e14:
                raise np.linalg.LinAlgError("ill conditioned")
            return np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            warnings.warn(
                "singular normal matrix; applying 1e-12 diagonal regularizer",
                RuntimeWarning,
                stacklevel=2,
            )
            return np.linalg.solve(a + 1e-12 * np.eye(dim), b)
    if kind != "logistic":
        raise ValueError(f"unknown problem kind {kind!r}")

    objs = [RegressionObjective("logistic", d, l2) for d in datasets]

    def pooled_value(t):
        return sum(o.loss(t) for o in objs)

    def pooled_grad(t):
        return sum(o.full_gradient(t) for o in objs)

    theta = np.zeros(dim)
    value = pooled_value(theta)
    grad = pooled_grad(theta)
    gnorm = float(np.linalg.norm(grad))
    for _ in range(max_iters):
        if gnorm <= tol:
            break
        # damped Newton with a gradient fallback; a candidate is accepted on
        # sufficient value decrease (global phase) or on a gradient-norm
        # decrease (near the optimum the value change is below float
        # resolution while Newton still contracts the gradient)
        hess = _pooled_logistic_hessian(datasets, theta, l2)
        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = grad
        slope = float(grad @ direction)
        if slope <= 0:
            direction, slope = grad, gnorm**2
        step = 1.0
        moved = False
        while step > 1e-18:
            cand = theta - step * direction
            cand_value = pooled_value(cand)
            cand_grad = pooled_grad(cand)
            cand_gnorm = float(np.linalg.norm(cand_grad))
            if cand_value <= value - 1e-4 * step * slope or cand_gnorm < gnorm:
                theta, value = cand, cand_value
                grad, gnorm = cand_grad, cand_gnorm
                moved = True
                break
            step *= 0.5
        if not moved:
            break  # stationary to float precision
    return theta


def _pooled_logistic_hessian(datasets, theta, l2):
    dim = datasets[0].dim
    hess = 2.0 * l2 * len(datasets) * np.eye(dim)
    for d in datasets:
        margins = d.targets * (d.inputs @ theta)
        s = _sigmoid(margins)
        weights = s * (1.0 - s) / d.n_samples
        hess += d.inputs.T @ (weights[:, None] * d.inputs)
    return hess


def datasets_to_csv(datasets: list[RegressionDataset], path) -> None:
    """One row per sample: features..., target, agent."""
    dim = datasets[0].dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(dim)] + ["target", "agent"])
        for d in datasets:
            for row, t in zip(d.inputs, d.targets):
                writer.writerow([repr(v) for v in row] + [repr(float(t)), d.owner])


def datasets_from_csv(path) -> list[RegressionDataset]:
    """Inverse of :func:`datasets_to_csv`."""
    by_agent: dict[int, list[tuple[list[float], float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = len(header) - 2
        for row in reader:
            feats = [float(v) for v in row[:dim]]
            by_agent.setdefault(int(row[-1]), []).append((feats, float(row[dim])))
    datasets = []
    for agent in sorted(by_agent):
        rows = by_agent[agent]
        datasets.append(
            RegressionDataset(
                np.array([r[0] for r in rows]),
                np.array([r[1] for r in rows]),
                owner=agent,
            )
        )
    return datasets
