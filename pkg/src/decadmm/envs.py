"""The two benchmark environments: grid localization and resource management.

Both expose the :class:`~decadmm.rl.Mdp` interface with one-hot
(state-bucket x action) features, a per-step reference ``step`` and a
batched ``rollout_batch`` backed by the shared kernels. Rewards follow the
maximization convention; the losses handed to the optimizers are their
negatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rl import Mdp, RolloutStats

__all__ = [
    "ChannelModel",
    "LocalizationEnv",
    "ResourceEnv",
    "make_localization_env",
    "make_resource_env",
    "DEFAULT_CHANNEL",
    "DEFAULT_PRICES",
]

# power-law channel constants for the localization task
DEFAULT_CHANNEL = {"l0": 20.7, "nu": 3.04, "noise": 0.1, "p0": 1.0, "floor": 1e-6}

# resource task prices: h0 fixed request cost, h1 holding cost, h2 price per
# acquired unit, p income per unit put to work. h3 is accepted for preset
# compatibility but enters no formula.
DEFAULT_PRICES = {"h0": 4.0, "h1": 2.0, "h2": 2.0, "p": 5.0, "h3": 3.0}


@dataclass(frozen=True)
class ChannelModel:
    """Power-law received-signal model ``P = l0 * p0 / d^nu + noise``."""

    l0: float = 20.7
    nu: float = 3.04
    noise: float = 0.1
    p0: float = 1.0
    floor: float = 1e-6


class LocalizationEnv(Mdp):
    """One agent searching a grid for a fixed target.

    Actions move one cell north/south/west/east with clipping at the
    boundary. The per-step reward is ``hit_reward`` while the agent sits
    within ``hit_radius`` of the target and the negative Euclidean distance
    otherwise, so the loss fed to the optimizers is distance-shaped.

    States are ``(x, y, obs_x, obs_y)``: the true cell plus the cell the
    policy observes. With ``oracle_state`` both coincide; otherwise the
    observation is recovered from a noisy received-power measurement by
    inverting the channel model along the true bearing.
    """

    n_actions = 4

    def __init__(
        self,
        width: int,
        height: int,
        target: tuple[int, int],
        hit_reward: float = 1.0,
        hit_radius: float = 1.0,
        start_region: tuple[tuple[int, int], tuple[int, int]] | None = None,
        oracle_state: bool = True,
        channel: ChannelModel = ChannelModel(),
        horizon: int = 50,
        discount: float = 0.99,
        agent: int = 0,
    ):
        tx, ty = target
        if not (0 <= tx < width and 0 <= ty < height):
            raise ValueError("target outside the grid")
        if hit_radius <= 0:
            raise ValueError("hit radius must be > 0")
        self.width = width
        self.height = height
        self.target = (int(tx), int(ty))
        self.hit_reward = float(hit_reward)
        self.hit_radius = float(hit_radius)
        self.oracle_state = oracle_state
        self.channel = channel
        self.horizon = horizon
        self.discount = discount
        self.agent = agent
        if start_region is None:
            start_region = ((0, width - 1), (0, height - 1))
        (x0, x1), (y0, y1) = start_region
        if not (0 <= x0 <= x1 < width and 0 <= y0 <= y1 < height):
            raise ValueError("start region outside the grid")
        self.start_region = ((int(x0), int(x1)), (int(y0), int(y1)))
        self.feature_dim = width * height * self.n_actions

    # -- observation ------------------------------------------------------

    def distance(self, x: int, y: int) -> float:
        return math.hypot(x - self.target[0], y - self.target[1])

    def observe(self, x: int, y: int, rng: np.random.Generator) -> tuple[int, int]:
        """Cell the policy sees for true position (x, y)."""
        if self.oracle_state:
            return x, y
        return self._estimate(x, y, float(rng.standard_normal()))

    def _estimate(self, x: int, y: int, noise_draw: float) -> tuple[int, int]:
        ch = self.channel
        dist = self.distance(x, y)
        d_eff = max(dist, 0.5)
        power = ch.l0 * ch.p0 / d_eff**ch.nu + ch.noise * noise_draw
        power = max(power, ch.floor)
        d_hat = (ch.l0 * ch.p0 / power) ** (1.0 / ch.nu)
        if dist > 0.0:
            ox = self.target[0] + d_hat * (x - self.target[0]) / dist
            oy = self.target[1] + d_hat * (y - self.target[1]) / dist
        else:
            ox, oy = float(self.target[0]), float(self.target[1])
        obs_x = min(max(int(ox + 0.5) if ox > 0 else 0, 0), self.width - 1)
        obs_y = min(max(int(oy + 0.5) if oy > 0 else 0, 0), self.height - 1)
        return obs_x, obs_y

    # -- Mdp interface ----------------------------------------------------

    def initial_state(self, rng: np.random.Generator):
        (x0, x1), (y0, y1) = self.start_region
        x = int(rng.integers(x0, x1 + 1))
        y = int(rng.integers(y0, y1 + 1))
        return (x, y, *self.observe(x, y, rng))

    def step(self, state, action: int, rng: np.random.Generator):
        x, y, _, _ = state
        dist = self.distance(x, y)
        loss = -self.hit_reward if dist < self.hit_radius else dist
        if action == 0 and y < self.height - 1:
            y += 1
        elif action == 1 and y > 0:
            y -= 1
        elif action == 2 and x > 0:
            x -= 1
        elif action == 3 and x < self.width - 1:
            x += 1
        return (x, y, *self.observe(x, y, rng)), loss

    def feature_indices(self, state) -> np.ndarray:
        _, _, ox, oy = state
        base = (oy * self.width + ox) * self.n_actions
        return base + np.arange(self.n_actions)

    def rollout_batch(self, theta, n_episodes, horizon, rng) -> RolloutStats:
        (x0, x1), (y0, y1) = self.start_region
        start_x = rng.integers(x0, x1 + 1, size=n_episodes).astype(np.int64)
        start_y = rng.integers(y0, y1 + 1, size=n_episodes).astype(np.int64)
        action_u = rng.random((n_episodes, horizon))
        if self.oracle_state:
            obs_noise = np.zeros((n_episodes, horizon))
        else:
            obs_noise = rng.standard_normal((n_episodes, horizon))
        ch = self.channel
        grad_sum, grad_sq, disc, raw = _kernels.rollout_localization(
            theta,
            self.width,
            self.height,
            self.target[0],
            self.target[1],
            self.hit_reward,
            self.hit_radius,
            self.discount,
            not self.oracle_state,
            ch.l0,
            ch.p0,
            ch.nu,
            ch.noise,
            ch.floor,
            start_x,
            start_y,
            action_u,
            obs_noise,
        )
        return RolloutStats(
            grad_mean=grad_sum / n_episodes,
            grad_sq_mean=grad_sq / n_episodes,
            disc_losses=disc,
            raw_rewards=raw,
        )


class ResourceEnv(Mdp):
    """Computation-resource pool serving Poisson task arrivals.

    The state is the number of available units in {0..capacity}; the action
    requests additional units. Per interval, ``rented = min(s + a, C)``
    units are open for service, arriving tasks occupy them as demand allows,
    and each remaining busy unit completes with probability
    ``1 - exp(-1/workload_mean)`` (unit interval, exponential workloads).
    The reward pays per net unit put to work and charges fixed, holding and
    acquisition costs whenever an arrival or completion event occurs;
    quiet intervals cost only the holding term.
    """

    def __init__(
        self,
        capacity: int = 6,
        arrival_rate: float = 3.0,
        workload_mean: float = 10.0,
        prices: dict | None = None,
        horizon: int = 30,
        discount: float = 0.99,
    ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if arrival_rate <= 0 or workload_mean <= 0:
            raise ValueError("rates must be > 0")
        merged = dict(DEFAULT_PRICES)
        merged.update(prices or {})
        self.capacity = capacity
        self.arrival_rate = float(arrival_rate)
        self.workload_mean = float(workload_mean)
        self.complete_p = 1.0 - math.exp(-1.0 / workload_mean)
        self.h0 = float(merged["h0"])
        self.h1 = float(merged["h1"])
        self.h2 = float(merged["h2"])
        self.price = float(merged["p"])
        self.h3_unused = float(merged.get("h3", 0.0))
        self.horizon = horizon
        self.discount = discount
        self.n_actions = capacity + 1
        self.feature_dim = (capacity + 1) ** 2

    def initial_state(self, rng: np.random.Generator):
        # a fresh slot starts with the whole pool idle
        return self.capacity

    def transition(self, state: int, action: int, arrivals: int, comp_u: np.ndarray):
        """Pure dynamics given the interval's draws; returns (next, reward)."""
        return _kernels._resource_step(
            state,
            action,
            self.capacity,
            arrivals,
            comp_u,
            self.complete_p,
            self.h0,
            self.h1,
            self.h2,
            self.price,
        )

    def step(self, state, action: int, rng: np.random.Generator):
        arrivals = int(rng.poisson(self.arrival_rate))
        comp_u = rng.random(self.capacity)
        nxt, reward = self.transition(state, action, arrivals, comp_u)
        return int(nxt), -float(reward)

    def feature_indices(self, state) -> np.ndarray:
        base = state * self.n_actions
        return base + np.arange(self.n_actions)

    def rollout_batch(self, theta, n_episodes, horizon, rng) -> RolloutStats:
        start = np.full(n_episodes, self.capacity, dtype=np.int64)
        arrivals = rng.poisson(self.arrival_rate, (n_episodes, horizon)).astype(
            np.int64
        )
        comp_u = rng.random((n_episodes, horizon, self.capacity))
        action_u = rng.random((n_episodes, horizon))
        grad_sum, grad_sq, disc, raw = _kernels.rollout_resource(
            theta,
            self.capacity,
            self.complete_p,
            self.h0,
            self.h1,
            self.h2,
            self.price,
            self.discount,
            start,
            arrivals,
            comp_u,
            action_u,
        )
        return RolloutStats(
            grad_mean=grad_sum / n_episodes,
            grad_sq_mean=grad_sq / n_episodes,
            disc_losses=disc,
            raw_rewards=raw,
        )


def make_localization_env(
    grid_size: int = 20,
    n_agents: int = 1,
    target: tuple[int, int] | None = None,
    priorities=None,
    d0: float = 1.0,
    heterogeneous: bool = False,
    channel: dict | None = None,
    oracle_state: bool = True,
    start="uniform",
    horizon: int = 50,
    discount: float = 0.99,
    seed: int = 0,
) -> list[LocalizationEnv]:
    """Per-agent localization environments on a shared grid.

    Homogeneous mode gives every agent the same hit reward and a common
    initial distribution: ``start`` is ``"uniform"`` (whole grid),
    ``"target"`` (all episodes begin on the target cell, the
    highest-proximity choice) or an explicit ``((x0, x1), (y0, y1))``
    region. Heterogeneous mode scales the hit reward by an agent priority
    (1..N by default) and confines each agent's starts to its own vertical
    strip of the grid.
    """
    ch_params = dict(DEFAULT_CHANNEL)
    ch_params.update(channel or {})
    ch = ChannelModel(**ch_params)
    rng = np.random.default_rng(seed)
    if target is None:
        lo, hi = grid_size // 4, 3 * grid_size // 4
        target = (int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))
    if priorities is None:
        priorities = (
            [float(i + 1) for i in range(n_agents)]
            if heterogeneous
            else [1.0] * n_agents
        )
    if len(priorities) != n_agents:
        raise ValueError("need one priority per agent")

    envs = []
    for i in range(n_agents):
        if heterogeneous:
            lo = (i * grid_size) // n_agents
            hi = ((i + 1) * grid_size) // n_agents - 1
            region = ((lo, max(lo, hi)), (0, grid_size - 1))
        elif start == "target":
            region = ((target[0], target[0]), (target[1], target[1]))
        elif start == "uniform":
            region = ((0, grid_size - 1), (0, grid_size - 1))
        else:
            region = start
        envs.append(
            LocalizationEnv(
                width=grid_size,
                height=grid_size,
                target=target,
                hit_reward=priorities[i],
                hit_radius=d0,
                start_region=region,
                oracle_state=oracle_state,
                channel=ch,
                horizon=horizon,
                discount=discount,
                agent=i,
            )
        )
    return envs


def make_resource_env(
    capacity: int = 6,
    arrival_rate: float = 3.0,
    workload_mean: float = 10.0,
    prices: dict | None = None,
    intervals_per_episode: int = 30,
    discount: float = 0.99,
    seed: int = 0,
) -> ResourceEnv:
    """Resource-management task; all agents share the same parameters."""
    del seed  # layout is fully specified; kept for interface symmetry
    return ResourceEnv(
        capacity=capacity,
        arrival_rate=arrival_rate,
        workload_mean=workload_mean,
        prices=prices,
        horizon=intervals_per_episode,
        discount=discount,
    )
