"""Built-in invariant battery behind ``decadmm selftest``.

A fast, dependency-free subset of the property suite: enough to verify an
installation end to end without the test harness.
"""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .core import HyperParams, TokenEngine, adaptive_eta
from .envs import make_resource_env
from .experiments import build_problem, run_single
from .graph import generate_network, metropolis_weights
from .problems import logistic_gradient, logistic_loss, ridge_gradient, ridge_loss
from .rl import PolicyGradientObjective, grad_log_policy, policy_probs


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise AssertionError(message)


def check_graph_generation() -> None:
    for seed in range(5):
        g = generate_network(12, 0.4, seed=seed)
        _check(g.is_connected(), "graph disconnected")
        _check(sorted(g.cycle) == list(range(12)), "cycle is not a permutation")


def check_metropolis() -> None:
    g = generate_network(8, 0.6, seed=3)
    w = metropolis_weights(g)
    _check(np.allclose(w, w.T), "mixing not symmetric")
    _check(np.allclose(w.sum(axis=1), 1.0, atol=1e-12), "rows do not sum to 1")
    _check(np.all(w >= -1e-15), "negative mixing weight")


def check_adaptive_eta() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        mu = rng.normal(size=6)
        g = rng.normal(size=6) * rng.uniform(0.1, 30)
        eta_bar = rng.uniform(0, 0.99)
        iota_sq = rng.uniform(0.1, 20)
        m = int(rng.integers(1, 40))
        eta = adaptive_eta(mu, g, eta_bar, iota_sq, m)
        dev = float(np.sum((mu - g) ** 2))
        _check(0.0 <= eta <= eta_bar + 1e-15, "eta outside [0, eta_bar]")
        _check(eta**2 * dev <= iota_sq / m * (1 + 1e-9), "variance budget broken")


def check_gradients() -> None:
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 4))
    t = rng.normal(size=30)
    labels = np.sign(rng.normal(size=30))
    for loss, grad, targets in (
        (ridge_loss, ridge_gradient, t),
        (logistic_loss, logistic_gradient, labels),
    ):
        theta = rng.normal(size=4)
        g = grad(theta, x, targets)
        num = np.zeros(4)
        for d in range(4):
            e = np.zeros(4)
            e[d] = 1e-6
            num[d] = (loss(theta + e, x, targets) - loss(theta - e, x, targets)) / 2e-6
        _check(np.allclose(g, num, rtol=1e-5, atol=1e-7), "gradient mismatch")


def check_policy() -> None:
    env = make_resource_env(capacity=4)
    rng = np.random.default_rng(2)
    theta = rng.normal(size=env.feature_dim)
    for state in range(env.capacity + 1):
        probs = policy_probs(theta, state, env)
        _check(abs(probs.sum() - 1.0) < 1e-12, "probabilities do not normalize")
        _check(np.all(probs > 0), "zero probability action")
        mean_score = sum(
            probs[a] * grad_log_policy(theta, state, a, env)
            for a in range(env.n_actions)
        )
        _check(np.max(np.abs(mean_score)) < 1e-10, "score mean not zero")


def _tiny_config() -> ExperimentConfig:
    return ExperimentConfig(
        kind="ridge",
        algorithms=["asi-admm"],
        n_agents=5,
        omega=0.5,
        iterations=200,
        seeds=[0],
        rho=3.0,
        tau=1.0,
        eta_bar=0.9,
        iota_sq=10.0,
        batch_size=5,
        samples_per_agent=40,
        dim=4,
    )


def check_engine_identity() -> None:
    cfg = _tiny_config()
    setup = build_problem(cfg, 0)
    hp = HyperParams(rho=3.0, tau=1.0, eta_bar=0.9, iota_sq=10.0, batch_size=5)
    engine = TokenEngine(setup.network, setup.objectives, hp, seed=0)
    for _ in range(200):
        engine.step()
    _check(engine.z_identity_drift() < 1e-9, "z identity drifted")


def check_determinism() -> None:
    cfg = _tiny_config()
    rec1, _ = run_single(cfg, "asi-admm", 0)
    rec2, _ = run_single(cfg, "asi-admm", 0)
    pairs = zip(rec1, rec2)
    _check(
        all(a.accuracy == b.accuracy and a.comm_scalars == b.comm_scalars for a, b in pairs),
        "rerun gave different results",
    )


def check_rl_engine() -> None:
    env = make_resource_env(capacity=4, intervals_per_episode=10)
    objectives = [PolicyGradientObjective(env) for _ in range(3)]
    g = generate_network(3, 1.0, seed=0)
    hp = HyperParams(rho=1.0, tau=5.0, eta_bar=0.8, iota_sq=10.0, batch_size=2)
    engine = TokenEngine(g, objectives, hp, seed=0)
    for _ in range(30):
        engine.step()
    _check(engine.z_identity_drift() < 1e-9, "z identity drifted in RL run")


ALL_CHECKS = [
    ("graph generation", check_graph_generation),
    ("metropolis weights", check_metropolis),
    ("adaptive eta guarantee", check_adaptive_eta),
    ("regression gradients vs finite differences", check_gradients),
    ("soft-max policy invariants", check_policy),
    ("token z identity", check_engine_identity),
    ("run determinism", check_determinism),
    ("rl engine smoke", check_rl_engine),
]
