"""Deterministic RNG stream derivation.

One master seed drives an entire experiment; every consumer gets its own
independent stream keyed by a purpose label and an agent index, so changing
how often one consumer draws never perturbs the others.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "graph": 0,
    "data": 1,
    "sample": 2,  # mini-batch / trajectory sampling, per agent
    "env": 3,  # environment construction (layout, priorities)
    "eval": 4,  # post-training policy evaluation
}


def rng_stream(master_seed: int, purpose: str, agent: int = 0) -> np.random.Generator:
    """Independent generator for (master seed, purpose, agent)."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(PURPOSES[purpose], agent))
    return np.random.default_rng(seq)
