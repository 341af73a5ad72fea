"""Random connected agent networks with a built-in token route.

Networks are built cycle-first: a ring over a random permutation of the
agents guarantees the token route by construction, then uniformly random
extra edges are added until the edge budget ``round(omega * n(n-1)/2)`` is
met. Metropolis weights for the gossip baselines are derived from the same
graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GraphError",
    "InvalidSize",
    "InvalidRatio",
    "NetworkGraph",
    "edge_budget",
    "generate_network",
    "metropolis_weights",
    "graph_to_text",
    "graph_from_text",
]


class GraphError(ValueError):
    """Base class for malformed network specifications."""


class InvalidSize(GraphError):
    """Fewer than two agents."""


class InvalidRatio(GraphError):
    """Connectivity ratio leaves no room for the token ring."""


def edge_budget(n: int, omega: float) -> int:
    """Target edge count ``round(omega * n(n-1)/2)``, rounding half up."""
    return int(np.floor(omega * n * (n - 1) / 2.0 + 0.5))


def _ring_minimum(n: int) -> int:
    # A ring over n >= 3 agents has n edges; the two-agent "ring" collapses
    # to the single available edge.
    return 1 if n == 2 else n


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected connected topology plus the token visiting order.

    ``cycle`` is a permutation of agent indices; consecutive entries
    (including last -> first) are always edges, so the token can walk the
    cycle forever.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    cycle: tuple[int, ...]
    connectivity_ratio: float
    seed: int | None = None
    _adj: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidSize(f"need at least 2 agents, got {self.n}")
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
                raise GraphError(f"invalid edge ({i}, {j})")
            adj[i, j] = adj[j, i] = True
        object.__setattr__(self, "_adj", adj)
        if sorted(self.cycle) != list(range(self.n)):
            raise GraphError("cycle is not a permutation of the agents")
        for a, b in zip(self.cycle, self.cycle[1:] + self.cycle[:1]):
            if not adj[a, b]:
                raise GraphError(f"cycle step ({a}, {b}) is not an edge")
        if not self.is_connected():
            raise GraphError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Boolean adjacency matrix (no self loops)."""
        return self._adj.copy()

    def degrees(self) -> np.ndarray:
        return self._adj.sum(axis=1).astype(np.int64)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self._adj[i])

    def is_connected(self) -> bool:
        """Breadth-first reachability from agent 0."""
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for v in np.flatnonzero(self._adj[u]):
                    if not seen[v]:
                        seen[v] = True
                        nxt.append(int(v))
            frontier = nxt
        return bool(seen.all())


def generate_network(
    n: int, omega: float, seed: int, clamp: bool = False
) -> NetworkGraph:
    """Random connected network with a guaranteed token cycle.

    Parameters
    ----------
    n : int
        Agent count, at least 2.
    omega : float
        Connectivity ratio in (0, 1]; the edge budget is
        ``round(omega * n(n-1)/2)``.
    seed : int
        Seed for the layout; the same seed reproduces the same graph.
    clamp : bool
        When the budget falls below the ring minimum, raise
        :class:`InvalidRatio` (default) or clamp the budget up to the ring
        and record the effective ratio in ``connectivity_ratio``.
    """
    if n < 2:
        raise InvalidSize(f"need at least 2 agents, got {n}")
    if not 0.0 < omega <= 1.0:
        raise InvalidRatio(f"omega must be in (0, 1], got {omega}")
    max_edges = n * (n - 1) // 2
    budget = edge_budget(n, omega)
    if budget < _ring_minimum(n):
        if not clamp:
            raise InvalidRatio(
                f"edge budget {budget} below ring minimum {_ring_minimum(n)} "
                f"for n={n}, omega={omega}"
            )
        budget = _ring_minimum(n)
    effective = 2.0 * budget / (n * (n - 1))

    rng = np.random.default_rng(seed)
    cycle = tuple(int(v) for v in rng.permutation(n))
    edges = set()
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        if a != b:
            edges.add((min(a, b), max(a, b)))

    extra = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if (i, j) not in edges
    ]
    rng.shuffle(extra)
    for pair in extra:
        if len(edges) >= budget:
            break
        edges.add(pair)
    assert len(edges) == min(budget, max_edges)

    return NetworkGraph(
        n=n,
        edges=frozenset(edges),
        cycle=cycle,
        connectivity_ratio=effective,
        seed=seed,
    )


def metropolis_weights(g: NetworkGraph) -> np.ndarray:
    """Symmetric doubly-stochastic mixing matrix via the Metropolis rule.

    ``W[i, j] = 1 / (1 + max(deg_i, deg_j))`` on edges; the diagonal absorbs
    the remainder so every row sums to one.
    """
    deg = g.degrees()
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def graph_to_text(g: NetworkGraph) -> str:
    """Plain-text adjacency list: header ``n omega seed``, one edge per line."""
    seed = "-" if g.seed is None else str(g.seed)
    lines = [f"{g.n} {g.connectivity_ratio!r} {seed}"]
    lines.append("cycle " + " ".join(str(v) for v in g.cycle))
    for i, j in sorted(g.edges):
        lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> NetworkGraph:
    """Inverse of :func:`graph_to_text`."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    n = int(head[0])
    omega = float(head[1])
    seed = None if head[2] == "-" else int(head[2])
    cycle_parts = lines[1].split()
    if cycle_parts[0] != "cycle":
        raise GraphError("missing cycle line")
    cycle = tuple(int(v) for v in cycle_parts[1:])
    edges = set()
    for ln in lines[2:]:
        i, j = (int(v) for v in ln.split())
        edges.add((min(i, j), max(i, j)))
    return NetworkGraph(
        n=n,
        edges=frozenset(edges),
        cycle=cycle,
        connectivity_ratio=omega,
        seed=seed,
    )
