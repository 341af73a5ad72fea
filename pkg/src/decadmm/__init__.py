"""Decentralized consensus optimization with token-passing incremental ADMM.

A desk-scale simulator and library: random networks with a built-in token
route, the adaptive stochastic incremental consensus-ADMM engine with its
vanilla and full-batch reductions, gossip and incremental-gradient baselines,
synthetic regression problems, two policy-gradient environments, and an
experiment runner with deterministic Monte-Carlo orchestration.
"""

__version__ = "0.1.0"

from .core import (
    AgentState,
    HyperParams,
    Token,
    TokenEngine,
    adaptive_eta,
    dual_update,
    ema_update,
    primal_update,
    token_z_update,
)
from .graph import NetworkGraph, generate_network, metropolis_weights
from .metrics import MetricsRecord, accuracy, consensus_error, lyapunov_value

__all__ = [
    "__version__",
    "AgentState",
    "HyperParams",
    "Token",
    "TokenEngine",
    "adaptive_eta",
    "ema_update",
    "primal_update",
    "dual_update",
    "token_z_update",
    "NetworkGraph",
    "generate_network",
    "metropolis_weights",
    "MetricsRecord",
    "accuracy",
    "consensus_error",
    "lyapunov_value",
]
