"""Reference optimizers for comparison: DGD, EXTRA and incremental GD.

The gossip methods update every agent synchronously from the previous
snapshot and pay ``2 |E|`` vector transmissions per round (one each way per
edge); incremental GD walks the token cycle like the ADMM engine and pays a
single vector per hop. All three consume the same objective interface and
feed the same record schema, so their curves are directly comparable.

Objectives exposing ``full_gradient`` are differentiated exactly (the
regression problems); otherwise the mini-batch stochastic gradient is used,
which is how the policy-gradient tasks run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GossipState",
    "dgd_round",
    "extra_round",
    "igd_step",
    "gossip_round_scalars",
]


@dataclass
class GossipState:
    """Synchronous snapshot: one parameter row per agent plus the mixing."""

    thetas: np.ndarray
    mixing: np.ndarray
    step_size: float

    def __post_init__(self):
        n = len(self.thetas)
        if self.mixing.shape != (n, n):
            raise ValueError("mixing matrix does not match the agent count")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")

    @classmethod
    def zeros(cls, n: int, dim: int, mixing: np.ndarray, step_size: float):
        return cls(np.zeros((n, dim)), mixing, step_size)


def gossip_round_scalars(n_edges: int, dim: int) -> int:
    """Scalars moved by one synchronous round: one vector each way per edge."""
    return 2 * n_edges * dim


def _agent_gradients(objectives, thetas, rngs, batch_size):
    """Gradient row per agent; exact where possible, stochastic otherwise."""
    grads = np.zeros_like(thetas)
    stats = [None] * len(objectives)
    for i, obj in enumerate(objectives):
        if hasattr(obj, "full_gradient"):
            grads[i] = obj.full_gradient(thetas[i])
        elif hasattr(obj, "gradient_and_stats"):
            grads[i], _, stats[i] = obj.gradient_and_stats(
                thetas[i], batch_size, rngs[i]
            )
        else:
            grads[i], _ = obj.stochastic_gradient(thetas[i], batch_size, rngs[i])
    return grads, stats


def dgd_round(state: GossipState, objectives, rngs=None, batch_size=None):
    """One decentralized gradient-descent round.

    ``theta_i <- sum_j W[i, j] theta_j - alpha grad_i(theta_i)`` for all
    agents simultaneously. Returns the new state and the per-agent gradient
    stats (None entries for exact objectives).
    """
    grads, stats = _agent_gradients(objectives, state.thetas, rngs, batch_size)
    mixed = state.mixing @ state.thetas
    new = GossipState(mixed - state.step_size * grads, state.mixing, state.step_size)
    return new, stats


def extra_round(
    state: GossipState,
    prev_state: GossipState | None,
    objectives,
    prev_grads: np.ndarray | None,
    rngs=None,
    batch_size=None,
):
    """One EXTRA round; the first round (no history) is a DGD-style step.

    ``x^{k+2} = (I + W) x^{k+1} - Wtilde x^k - gamma (g^{k+1} - g^k)`` with
    ``Wtilde = (I + W) / 2``. Returns ``(new_state, grads, stats)`` so the
    caller can thread the gradient history through (one gradient evaluation
    per agent per round, like the exact recursion).
    """
    grads, stats = _agent_gradients(objectives, state.thetas, rngs, batch_size)
    if prev_state is None or prev_grads is None:
        mixed = state.mixing @ state.thetas
        new_thetas = mixed - state.step_size * grads
    else:
        w = state.mixing
        w_tilde = 0.5 * (np.eye(len(w)) + w)
        new_thetas = (
            w @ state.thetas
            + state.thetas
            - w_tilde @ prev_state.thetas
            - state.step_size * (grads - prev_grads)
        )
    new = GossipState(new_thetas, state.mixing, state.step_size)
    return new, grads, stats


def igd_step(theta: np.ndarray, objective, gamma: float, rng=None, batch_size=None):
    """One incremental-gradient hop: the single iterate descends in place.

    Returns ``(theta', stats)``; the token (theta) then passes to the next
    agent on the cycle, costing one vector transmission.
    """
    if gamma <= 0:
        raise ValueError("step size must be > 0")
    if hasattr(objective, "full_gradient"):
        grad = objective.full_gradient(theta)
        stats = None
    elif hasattr(objective, "gradient_and_stats"):
        grad, _, stats = objective.gradient_and_stats(theta, batch_size, rng)
    else:
        grad, _ = objective.stochastic_gradient(theta, batch_size, rng)
        stats = None
    return theta - gamma * grad, stats
