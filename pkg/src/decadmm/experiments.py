"""Single-seed experiment assembly and the per-algorithm run loops.

Everything here is a pure function of (config, algorithm, seed): problems,
environments and optimizer streams are all derived from the master seed
through the documented stream split, so reruns reproduce results exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .baselines import GossipState, dgd_round, extra_round, gossip_round_scalars, igd_step
from .core import HyperParams, TokenEngine
from .envs import make_localization_env, make_resource_env
from .graph import NetworkGraph, generate_network, metropolis_weights
from .metrics import MetricsRecord, accuracy, consensus_error, lyapunov_value
from .problems import RegressionObjective, centralized_solve, synthesize_logistic, synthesize_ridge
from .rl import PolicyGradientObjective, _pick, policy_probs
from .seeding import rng_stream

__all__ = [
    "ProblemSetup",
    "sub_seed",
    "build_problem",
    "run_single",
    "evaluate_resource_policy",
]

TOKEN_ALGORITHMS = ("asi-admm", "si-admm", "i-admm")
GOSSIP_ALGORITHMS = ("dgd", "extra")
ALL_ALGORITHMS = TOKEN_ALGORITHMS + GOSSIP_ALGORITHMS + ("igd",)


def sub_seed(master_seed: int, purpose: str, agent: int = 0) -> int:
    """Integer seed for a derived stream (for APIs that take plain seeds)."""
    return int(rng_stream(master_seed, purpose, agent).integers(2**63))


@dataclass
class ProblemSetup:
    """Everything one optimizer run needs, fully derived from one seed."""

    kind: str
    network: NetworkGraph
    objectives: list
    dim: int
    theta_star: np.ndarray | None = None
    rl_eval_env = None


def build_problem(cfg, seed: int) -> ProblemSetup:
    """Instantiate network plus objectives for one Monte-Carlo seed."""
    network = generate_network(
        cfg.n_agents, cfg.omega, seed=sub_seed(seed, "graph"), clamp=True
    )
    if cfg.kind in ("ridge", "logistic"):
        if cfg.kind == "ridge":
            datasets, _ = synthesize_ridge(
                cfg.n_agents,
                cfg.samples_per_agent,
                dim=cfg.dim,
                noise_sigma=cfg.noise_sigma,
                seed=sub_seed(seed, "data"),
            )
        else:
            datasets, _ = synthesize_logistic(
                cfg.n_agents,
                cfg.samples_per_agent,
                dim=cfg.dim,
                seed=sub_seed(seed, "data"),
            )
        objectives = [RegressionObjective(cfg.kind, d, cfg.l2) for d in datasets]
        theta_star = centralized_solve(cfg.kind, datasets, cfg.l2)
        return ProblemSetup(cfg.kind, network, objectives, cfg.dim, theta_star)

    if cfg.kind == "localization":
        envs = make_localization_env(
            n_agents=cfg.n_agents,
            heterogeneous=cfg.env_params.get("heterogeneous", False),
            horizon=cfg.horizon,
            discount=cfg.discount,
            seed=sub_seed(seed, "env"),
            **{
                k: v
                for k, v in cfg.env_params.items()
                if k
                in (
                    "grid_size",
                    "target",
                    "priorities",
                    "d0",
                    "channel",
                    "oracle_state",
                    "start",
                )
            },
        )
        objectives = [PolicyGradientObjective(env, cfg.horizon) for env in envs]
        return ProblemSetup(cfg.kind, network, objectives, envs[0].feature_dim)

    if cfg.kind == "resource":
        env = make_resource_env(
            capacity=cfg.env_params.get("capacity", 6),
            arrival_rate=cfg.env_params.get("arrival_rate", 3.0),
            workload_mean=cfg.env_params.get("workload_mean", 10.0),
            prices=cfg.env_params.get("prices"),
            intervals_per_episode=cfg.horizon,
            discount=cfg.discount,
            seed=sub_seed(seed, "env"),
        )
        objectives = [PolicyGradientObjective(env, cfg.horizon) for _ in range(cfg.n_agents)]
        setup = ProblemSetup(cfg.kind, network, objectives, env.feature_dim)
        setup.rl_eval_env = env
        return setup

    raise ValueError(f"unknown experiment kind {cfg.kind!r}")


class _Measurer:
    """Builds records for either problem family from a state snapshot."""

    def __init__(self, setup: ProblemSetup, cfg):
        self.setup = setup
        self.cfg = cfg
        self.t0 = time.perf_counter()
        self.latest_rewards = np.full(setup.network.n, np.nan)
        if setup.theta_star is not None:
            self.thetas0 = np.zeros((setup.network.n, setup.dim))

    def note_stats(self, agent: int, stats) -> None:
        if stats and "mean_reward" in stats:
            self.latest_rewards[agent] = stats["mean_reward"]

    def record(
        self, k, comm, thetas, lambdas=None, z=None, rho=None
    ) -> MetricsRecord:
        acc = None
        lyap = None
        reward = None
        if self.setup.theta_star is not None:
            acc = accuracy(thetas, self.thetas0, self.setup.theta_star)
            if self.cfg.record_lyapunov and lambdas is not None and z is not None:
                lyap = lyapunov_value(
                    thetas, lambdas, z, rho, self.setup.objectives
                )
        elif not np.all(np.isnan(self.latest_rewards)):
            reward = float(np.nanmean(self.latest_rewards))
        return MetricsRecord(
            k=k,
            comm_scalars=comm,
            accuracy=acc,
            consensus_error=consensus_error(thetas),
            avg_reward=reward,
            lyapunov=lyap,
            wall_time_s=time.perf_counter() - self.t0,
        )


def _resolve_batch(cfg) -> int | None:
    if cfg.batch_size is not None:
        return cfg.batch_size
    if cfg.kind in ("ridge", "logistic"):
        if cfg.batch_ratio is not None:
            return max(1, int(np.ceil(cfg.batch_ratio * cfg.samples_per_agent)))
        return None
    return cfg.pg_episodes


def run_single(cfg, algorithm: str, seed: int, setup: ProblemSetup | None = None):
    """Run one optimizer for one seed; returns (records, final_state_dict)."""
    if setup is None:
        setup = build_problem(cfg, seed)
    if algorithm in TOKEN_ALGORITHMS:
        return _run_token(cfg, algorithm, seed, setup)
    if algorithm == "igd":
        return _run_igd(cfg, seed, setup)
    if algorithm in GOSSIP_ALGORITHMS:
        return _run_gossip(cfg, algorithm, seed, setup)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _run_token(cfg, algorithm, seed, setup):
    hp = HyperParams(
        rho=cfg.rho,
        tau=cfg.tau if algorithm == "asi-admm" else cfg.tau_vanilla,
        gamma=cfg.gamma,
        eta_bar=cfg.eta_bar if algorithm == "asi-admm" else 0.0,
        iota_sq=cfg.iota_sq,
        batch_size=_resolve_batch(cfg),
    )
    engine = TokenEngine(
        setup.network, setup.objectives, hp, seed=seed, algorithm=algorithm
    )
    measurer = _Measurer(setup, cfg)
    records = []
    for _ in range(cfg.iterations):
        agent = engine.step()
        measurer.note_stats(agent, engine.agent_stats[agent])
        if engine.k % cfg.metric_stride == 0:
            records.append(
                measurer.record(
                    engine.k,
                    engine.comm_scalars,
                    engine.thetas(),
                    engine.lambdas(),
                    engine.token.z,
                    hp.rho,
                )
            )
    final = {"thetas": engine.thetas(), "z": engine.token.z.copy(), "engine": engine}
    return records, final


def _run_igd(cfg, seed, setup):
    if cfg.igd_step is None:
        raise ValueError("igd requires a step size")
    n = setup.network.n
    theta = np.zeros(setup.dim)
    rngs = [rng_stream(seed, "sample", agent) for agent in range(n)]
    batch = _resolve_batch(cfg)
    measurer = _Measurer(setup, cfg)
    comm = 0
    records = []
    for k in range(1, cfg.iterations + 1):
        agent = setup.network.cycle[(k - 1) % n]
        theta, stats = igd_step(
            theta, setup.objectives[agent], cfg.igd_step, rngs[agent], batch
        )
        measurer.note_stats(agent, stats)
        comm += setup.dim
        if k % cfg.metric_stride == 0:
            records.append(measurer.record(k, comm, np.tile(theta, (n, 1))))
    final = {"thetas": np.tile(theta, (n, 1)), "z": theta.copy()}
    return records, final


def _run_gossip(cfg, algorithm, seed, setup):
    step = cfg.dgd_step if algorithm == "dgd" else cfg.extra_step
    if step is None:
        raise ValueError(f"{algorithm} requires a step size")
    n = setup.network.n
    mixing = metropolis_weights(setup.network)
    state = GossipState.zeros(n, setup.dim, mixing, step)
    rngs = [rng_stream(seed, "sample", agent) for agent in range(n)]
    batch = _resolve_batch(cfg)
    per_round = gossip_round_scalars(setup.network.n_edges, setup.dim)
    measurer = _Measurer(setup, cfg)
    comm = 0
    records = []
    prev_state = None
    prev_grads = None
    rounds = cfg.gossip_rounds if cfg.gossip_rounds is not None else cfg.iterations
    for k in range(1, rounds + 1):
        if algorithm == "dgd":
            new_state, stats = dgd_round(state, setup.objectives, rngs, batch)
        else:
            new_state, prev_grads, stats = extra_round(
                state, prev_state, setup.objectives, prev_grads, rngs, batch
            )
        prev_state, state = state, new_state
        for agent, st in enumerate(stats):
            measurer.note_stats(agent, st)
        comm += per_round
        if k % cfg.metric_stride == 0:
            records.append(measurer.record(k, comm, state.thetas))
    final = {"thetas": state.thetas.copy(), "z": state.thetas.mean(axis=0)}
    return records, final


def evaluate_resource_policy(env, theta: np.ndarray | None, intervals: int, rng):
    """Roll the resource task under a fixed policy for a stretch of intervals.

    ``theta=None`` plays actions uniformly at random. Episodes restart every
    ``env.horizon`` intervals. Returns (mean reward per interval, trace rows
    ``(step, state, action, reward, demand)``).
    """
    rows = []
    total = 0.0
    state = env.initial_state(rng)
    for t in range(intervals):
        if t > 0 and t % env.horizon == 0:
            state = env.initial_state(rng)
        if theta is None:
            action = int(rng.integers(0, env.n_actions))
        else:
            action = _pick(policy_probs(theta, state, env), rng.random())
        arrivals = int(rng.poisson(env.arrival_rate))
        comp_u = rng.random(env.capacity)
        nxt, reward = env.transition(state, action, arrivals, comp_u)
        rows.append((t, int(state), action, float(reward), arrivals))
        total += float(reward)
        state = int(nxt)
    return total / intervals, rows
