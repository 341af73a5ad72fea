"""Policy-gradient machinery: soft-max policies, REINFORCE, mini-batch PG.

Policies are linear in a bounded feature map over (state, action); action
distributions come from a numerically safe soft-max. The gradient estimator
multiplies the summed per-step score functions by the discounted loss of the
whole episode (no baseline, no per-step truncation), averaged over a
mini-batch of fresh episodes.

Environments implementing :meth:`Mdp.rollout_batch` get the fast batched
path (see :mod:`decadmm._kernels`); everything else falls back to explicit
:class:`Trajectory` sampling, which is also the reference implementation the
tests check the kernels against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mdp",
    "Trajectory",
    "RolloutStats",
    "StaleTrajectoryError",
    "policy_probs",
    "grad_log_policy",
    "sample_trajectory",
    "reinforce_gradient",
    "minibatch_pg",
    "PolicyGradientObjective",
    "trajectory_to_csv_rows",
]


class StaleTrajectoryError(RuntimeError):
    """A trajectory was generated under a different policy parameter."""


class Mdp:
    """Finite-action MDP with a bounded linear feature map.

    Subclasses set ``n_actions``, ``feature_dim``, ``horizon`` and
    ``discount``, implement ``initial_state`` and ``step`` (returning the
    next state and a per-step *loss*, i.e. negated reward), and provide
    features either as ``feature_indices(state)`` (one-hot slot per action)
    or by overriding ``feature_vector``.
    """

    n_actions: int
    feature_dim: int
    horizon: int
    discount: float

    def initial_state(self, rng: np.random.Generator):
        raise NotImplementedError

    def step(self, state, action: int, rng: np.random.Generator):
        raise NotImplementedError

    def feature_vector(self, state, action: int) -> np.ndarray:
        indices = getattr(self, "feature_indices", None)
        if indices is None:
            raise NotImplementedError("define feature_indices or feature_vector")
        phi = np.zeros(self.feature_dim)
        phi[indices(state)[action]] = 1.0
        return phi

    def action_logits(self, theta: np.ndarray, state) -> np.ndarray:
        indices = getattr(self, "feature_indices", None)
        if indices is not None:
            return theta[indices(state)]
        return np.array(
            [theta @ self.feature_vector(state, a) for a in range(self.n_actions)]
        )


@dataclass
class Trajectory:
    """One sampled episode plus the policy snapshot that generated it."""

    states: list
    actions: np.ndarray
    losses: np.ndarray
    theta_snapshot: np.ndarray
    agent: int | None = None

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need T+1 states for T actions")
        if len(self.actions) != len(self.losses):
            raise ValueError("need one loss per action")

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def discounted_loss(self, alpha: float) -> float:
        return float(np.sum(alpha ** np.arange(self.horizon) * self.losses))

    def total_reward(self) -> float:
        return float(-np.sum(self.losses))


@dataclass
class RolloutStats:
    """Batched rollout summary used by the optimizers and metrics."""

    grad_mean: np.ndarray
    grad_sq_mean: np.ndarray
    disc_losses: np.ndarray
    raw_rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_episodes(self) -> int:
        return len(self.disc_losses)

    @property
    def mean_reward(self) -> float:
        return float(np.mean(self.raw_rewards))


def policy_probs(theta: np.ndarray, state, mdp: Mdp) -> np.ndarray:
    """Soft-max action distribution; strictly positive, sums to one."""
    logits = mdp.action_logits(theta, state)
    logits = logits - logits.max()
    expd = np.exp(logits)
    return expd / expd.sum()


def grad_log_policy(theta: np.ndarray, state, action: int, mdp: Mdp) -> np.ndarray:
    """Score function ``phi(s, a) - sum_u pi(u|s) phi(s, u)``."""
    probs = policy_probs(theta, state, mdp)
    indices = getattr(mdp, "feature_indices", None)
    if indices is not None:
        idx = indices(state)
        out = np.zeros(mdp.feature_dim)
        out[idx[action]] += 1.0
        np.subtract.at(out, idx, probs)
        return out
    out = mdp.feature_vector(state, action).astype(float)
    for a in range(mdp.n_actions):
        out -= probs[a] * mdp.feature_vector(state, a)
    return out


def _pick(probs: np.ndarray, u: float) -> int:
    acc = 0.0
    for a in range(len(probs) - 1):
        acc += probs[a]
        if u < acc:
            return a
    return len(probs) - 1


def sample_trajectory(
    mdp: Mdp, theta: np.ndarray, horizon: int, rng: np.random.Generator, agent=None
) -> Trajectory:
    """Roll one episode under the soft-max policy for ``theta``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = mdp.initial_state(rng)
    states = [state]
    actions = np.zeros(horizon, dtype=np.int64)
    losses = np.zeros(horizon)
    for t in range(horizon):
        probs = policy_probs(theta, state, mdp)
        action = _pick(probs, rng.random())
        state, loss = mdp.step(state, action, rng)
        states.append(state)
        actions[t] = action
        losses[t] = loss
    return Trajectory(states, actions, losses, theta.copy(), agent=agent)


def reinforce_gradient(traj: Trajectory, theta: np.ndarray, mdp: Mdp) -> np.ndarray:
    """Score-sum times discounted episode loss.

    ``[sum_t grad log pi(a_t|s_t)] * [sum_t alpha^t loss_t]``, the plain
    likelihood-ratio estimator of the truncated-horizon objective gradient.
    """
    if not np.array_equal(traj.theta_snapshot, theta):
        raise StaleTrajectoryError("trajectory was sampled under different theta")
    score = np.zeros(mdp.feature_dim)
    for t in range(traj.horizon):
        score += grad_log_policy(theta, traj.states[t], int(traj.actions[t]), mdp)
    return score * traj.discounted_loss(mdp.discount)


def minibatch_pg(
    theta: np.ndarray,
    mdp: Mdp,
    n_episodes: int,
    horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Average of ``n_episodes`` fresh REINFORCE estimates."""
    return collect_pg(theta, mdp, n_episodes, horizon, rng).grad_mean


def collect_pg(
    theta: np.ndarray,
    mdp: Mdp,
    n_episodes: int,
    horizon: int,
    rng: np.random.Generator,
) -> RolloutStats:
    """Mini-batch policy gradient plus episode statistics.

    Uses the environment's batched kernel when available, the explicit
    trajectory path otherwise.
    """
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    rollout = getattr(mdp, "rollout_batch", None)
    if rollout is not None:
        return rollout(theta, n_episodes, horizon, rng)
    grads = np.zeros((n_episodes, mdp.feature_dim))
    disc = np.zeros(n_episodes)
    raw = np.zeros(n_episodes)
    for m in range(n_episodes):
        traj = sample_trajectory(mdp, theta, horizon, rng)
        grads[m] = reinforce_gradient(traj, theta, mdp)
        disc[m] = traj.discounted_loss(mdp.discount)
        raw[m] = traj.total_reward()
    return RolloutStats(
        grad_mean=grads.mean(axis=0),
        grad_sq_mean=(grads**2).mean(axis=0),
        disc_losses=disc,
        raw_rewards=raw,
    )


class PolicyGradientObjective:
    """Adapts an MDP to the objective interface of the optimizers.

    The "samples" of this objective are whole episodes: a batch size of M
    means M fresh trajectories per gradient query. Episode statistics of the
    latest query are reported alongside for the reward metrics.
    """

    def __init__(self, mdp: Mdp, horizon: int | None = None):
        self.mdp = mdp
        self.horizon = mdp.horizon if horizon is None else horizon
        self.dim = mdp.feature_dim

    def stochastic_gradient(self, theta, batch_size, rng):
        g, count, _ = self.gradient_and_stats(theta, batch_size, rng)
        return g, count

    def gradient_and_stats(self, theta, batch_size, rng):
        if batch_size is None:
            raise ValueError("policy gradients have no full-batch mode")
        stats = collect_pg(theta, self.mdp, batch_size, self.horizon, rng)
        info = {
            "mean_reward": stats.mean_reward,
            "rewards": stats.raw_rewards,
        }
        return stats.grad_mean, batch_size, info


def trajectory_to_csv_rows(traj: Trajectory) -> list[tuple]:
    """Rows (step, state, action, reward) for the trace dumps."""
    return [
        (t, traj.states[t], int(traj.actions[t]), -float(traj.losses[t]))
        for t in range(traj.horizon)
    ]
