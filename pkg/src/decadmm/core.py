"""Token-passing incremental ADMM engine.

One agent updates per iteration, in a fixed order given by the network's
token cycle. The circulating token carries the global iterate ``z`` and an
exponential moving average ``mu`` of the mini-batch gradients; ``mu``'s decay
weight is chosen adaptively each visit so that the stale-memory contribution
to the estimator variance never exceeds ``iota_sq / M``.

The same engine covers three algorithm variants:

* ``asi-admm``  -- adaptive EMA weight, token carries (z, mu);
* ``si-admm``   -- EMA disabled (weight 0), token carries z only;
* ``i-admm``    -- additionally uses the full local dataset every visit.

Variant selection only flips the EMA cap, the batch size, and the per-hop
communication price; the update equations are shared, which is what makes
the reductions exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .graph import NetworkGraph
from .seeding import rng_stream

__all__ = [
    "ALGORITHM_VARIANTS",
    "AgentState",
    "Token",
    "HyperParams",
    "Objective",
    "EtaGuaranteeViolation",
    "adaptive_eta",
    "ema_update",
    "primal_update",
    "dual_update",
    "token_z_update",
    "TokenEngine",
]

# variant -> (eta_bar forced to zero, full batch forced, scalars per token hop
# in units of the parameter dimension)
ALGORITHM_VARIANTS = {
    "asi-admm": (False, False, 2),
    "si-admm": (True, False, 1),
    "i-admm": (True, True, 1),
}


class EtaGuaranteeViolation(RuntimeError):
    """The adaptive decay weight broke its variance-control contract."""


@runtime_checkable
class Objective(Protocol):
    """Pluggable local loss seen by one agent."""

    dim: int

    def stochastic_gradient(
        self, theta: np.ndarray, batch_size: int | None, rng: np.random.Generator
    ) -> tuple[np.ndarray, int]:
        """Unbiased gradient estimate and the number of samples averaged."""
        ...


@dataclass
class AgentState:
    """Primal and dual variable of one agent, same dimension for the run."""

    theta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if self.theta.shape != self.lam.shape or self.theta.ndim != 1:
            raise ValueError("theta and lambda must be 1-d with equal shape")

    @classmethod
    def zeros(cls, dim: int) -> "AgentState":
        # Zero initialization is load bearing: it makes the incremental
        # z-update equal to the running average of theta_i - lambda_i / rho.
        return cls(np.zeros(dim), np.zeros(dim))


@dataclass
class Token:
    """Circulating pair: global iterate ``z`` and gradient memory ``mu``."""

    z: np.ndarray
    mu: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "Token":
        return cls(np.zeros(dim), np.zeros(dim))


@dataclass(frozen=True)
class HyperParams:
    """Validated optimizer constants.

    rho      -- consensus penalty, > 0
    tau      -- proximal weight, >= 0
    gamma    -- dual step scale, > 0
    eta_bar  -- EMA decay cap in [0, 1)
    iota_sq  -- variance-control constant, > 0
    batch_size -- mini-batch size, >= 1 (None means full batch)
    """

    rho: float
    tau: float = 0.0
    gamma: float = 1.0
    eta_bar: float = 0.0
    iota_sq: float = 1.0
    batch_size: int | None = 1

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be > 0")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 <= self.eta_bar < 1.0:
            raise ValueError("eta_bar must be in [0, 1)")
        if self.iota_sq <= 0:
            raise ValueError("iota_sq must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def adaptive_eta(
    mu: np.ndarray, g: np.ndarray, eta_bar: float, iota_sq: float, batch_size: int
) -> float:
    """Largest decay weight <= eta_bar keeping the memory term under iota_sq/M.

    Returns ``eta_bar`` whenever ``eta_bar^2 ||mu - g||^2 <= iota_sq / M``,
    otherwise ``sqrt(iota_sq / M) / ||mu - g||``. The zero-deviation case
    lands in the first branch, so no division by zero can occur.
    """
    if mu.shape != g.shape:
        raise ValueError("mu and g must have the same shape")
    if eta_bar == 0.0:
        return 0.0
    budget = iota_sq / batch_size
    dev_sq = float(np.sum((mu - g) ** 2))
    if eta_bar**2 * dev_sq <= budget:
        return eta_bar
    return float(np.sqrt(budget) / np.sqrt(dev_sq))


def ema_update(mu: np.ndarray, g: np.ndarray, eta: float) -> np.ndarray:
    """Weighted moving-average step ``eta * mu + (1 - eta) * g``."""
    if mu.shape != g.shape:
        raise ValueError("mu and g must have the same shape")
    return eta * mu + (1.0 - eta) * g


def primal_update(state: AgentState, token: Token, hp: HyperParams) -> np.ndarray:
    """Closed-form minimizer of the linearized proximal subproblem.

    Minimizes ``<mu, theta - theta_k> + rho/2 ||z - theta + lambda/rho||^2
    + tau/2 ||theta - theta_k||^2`` whose stationarity condition gives
    ``theta = (rho z + lambda + tau theta_k - mu) / (rho + tau)``; the
    objective is strictly convex since rho + tau > 0.
    """
    return (hp.rho * token.z + state.lam + hp.tau * state.theta - token.mu) / (
        hp.rho + hp.tau
    )


def dual_update(
    lam: np.ndarray, z: np.ndarray, theta_new: np.ndarray, hp: HyperParams
) -> np.ndarray:
    """Scaled ascent step ``lambda + rho gamma (z - theta_new)``."""
    return lam + hp.rho * hp.gamma * (z - theta_new)


def token_z_update(
    z: np.ndarray,
    theta_old: np.ndarray,
    theta_new: np.ndarray,
    lam_old: np.ndarray,
    lam_new: np.ndarray,
    rho: float,
    n: int,
) -> np.ndarray:
    """Incremental maintenance of ``mean_i(theta_i - lambda_i / rho)``."""
    return z + ((theta_new - lam_new / rho) - (theta_old - lam_old / rho)) / n


class TokenEngine:
    """Drives the token walk over the network for one experiment run.

    The engine is strictly single-threaded (the walk is sequential); run
    several engines for Monte-Carlo seeds, they share no mutable state.
    ``check_invariants`` keeps the z-identity self-check on every step.
    """

    # relative float slack for the variance-control self-check
    _ETA_SLACK = 1e-9

    def __init__(
        self,
        network: NetworkGraph,
        objectives: list[Objective],
        hp: HyperParams,
        seed: int,
        algorithm: str = "asi-admm",
        check_invariants: bool = True,
    ):
        if algorithm not in ALGORITHM_VARIANTS:
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if len(objectives) != network.n:
            raise ValueError("need one objective per agent")
        dims = {o.dim for o in objectives}
        if len(dims) != 1:
            raise ValueError("objectives disagree on the parameter dimension")

        zero_eta, full_batch, hop_price = ALGORITHM_VARIANTS[algorithm]
        self.algorithm = algorithm
        self.network = network
        self.objectives = objectives
        self.hp = hp
        self.eta_bar = 0.0 if zero_eta else hp.eta_bar
        self.batch_size = None if full_batch else hp.batch_size
        self.hop_scalars = hop_price * dims.pop()
        self.seed = seed

        self.dim = objectives[0].dim
        self.states = [AgentState.zeros(self.dim) for _ in range(network.n)]
        self.token = Token.zeros(self.dim)
        self.k = 0
        self.comm_scalars = 0
        self.check_invariants = check_invariants
        self.max_eta_ratio = 0.0
        self.last_eta = 0.0
        self.agent_stats: list[dict] = [{} for _ in range(network.n)]
        self._rngs = [
            rng_stream(seed, "sample", agent) for agent in range(network.n)
        ]

    # -- stepping ---------------------------------------------------------

    def active_agent(self) -> int:
        return self.network.cycle[self.k % self.network.n]

    def step(self) -> int:
        """One token visit; returns the agent that updated."""
        i = self.active_agent()
        state = self.states[i]
        obj = self.objectives[i]

        if hasattr(obj, "gradient_and_stats"):
            g, count, stats = obj.gradient_and_stats(
                state.theta, self.batch_size, self._rngs[i]
            )
            self.agent_stats[i] = stats
        else:
            g, count = obj.stochastic_gradient(
                state.theta, self.batch_size, self._rngs[i]
            )

        eta = adaptive_eta(self.token.mu, g, self.eta_bar, self.hp.iota_sq, count)
        self._check_eta(eta, g, count)
        mu_new = ema_update(self.token.mu, g, eta)
        self.last_eta = eta

        after_ema = Token(self.token.z, mu_new)
        theta_new = primal_update(state, after_ema, self.hp)
        lam_new = dual_update(state.lam, self.token.z, theta_new, self.hp)
        z_new = token_z_update(
            self.token.z,
            state.theta,
            theta_new,
            state.lam,
            lam_new,
            self.hp.rho,
            self.network.n,
        )

        self.states[i] = AgentState(theta_new, lam_new)
        self.token = Token(z_new, mu_new)
        self.k += 1
        self.comm_scalars += self.hop_scalars

        if self.check_invariants:
            drift = self.z_identity_drift()
            if drift > 1e-9:
                raise RuntimeError(f"z identity drifted to {drift:.3e} at k={self.k}")
        return i

    def _check_eta(self, eta: float, g: np.ndarray, count: int) -> None:
        budget = self.hp.iota_sq / count
        # eta == 0 satisfies the budget for any deviation, including ones
        # whose square would overflow
        lhs = eta**2 * float(np.sum((self.token.mu - g) ** 2)) if eta else 0.0
        self.max_eta_ratio = max(self.max_eta_ratio, lhs / budget)
        if lhs > budget * (1.0 + self._ETA_SLACK):
            raise EtaGuaranteeViolation(
                f"eta^2 ||mu - g||^2 = {lhs} exceeds iota^2/M = {budget}"
            )

    # -- views ------------------------------------------------------------

    def thetas(self) -> np.ndarray:
        """Per-agent primal variables, stacked (n, dim)."""
        return np.stack([s.theta for s in self.states])

    def lambdas(self) -> np.ndarray:
        return np.stack([s.lam for s in self.states])

    def z_identity_drift(self) -> float:
        """Max deviation of z from the recomputed average it should equal."""
        direct = np.mean(
            [s.theta - s.lam / self.hp.rho for s in self.states], axis=0
        )
        return float(np.max(np.abs(self.token.z - direct)))

    # -- checkpointing ----------------------------------------------------

    SNAPSHOT_VERSION = 1

    def save_snapshot(self, path) -> None:
        """Resumable text snapshot of the full engine state."""
        payload = {
            "version": self.SNAPSHOT_VERSION,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "k": self.k,
            "comm_scalars": self.comm_scalars,
            "max_eta_ratio": self.max_eta_ratio,
            "z": self.token.z.tolist(),
            "mu": self.token.mu.tolist(),
            "thetas": self.thetas().tolist(),
            "lambdas": self.lambdas().tolist(),
            "rng_states": [r.bit_generator.state for r in self._rngs],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    def load_snapshot(self, path) -> None:
        with open(path) as fh:
            payload = json.load(fh)
        if payload["version"] != self.SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {payload['version']}")
        if payload["algorithm"] != self.algorithm:
            raise ValueError("snapshot belongs to a different algorithm")
        self.k = payload["k"]
        self.comm_scalars = payload["comm_scalars"]
        self.max_eta_ratio = payload["max_eta_ratio"]
        self.token = Token(np.array(payload["z"]), np.array(payload["mu"]))
        self.states = [
            AgentState(np.array(t), np.array(l))
            for t, l in zip(payload["thetas"], payload["lambdas"])
        ]
        for rng, st in zip(self._rngs, payload["rng_states"]):
            rng.bit_generator.state = st
