"""Undirected communication graph with legitimate and malicious roles.

Legitimate agents occupy indices ``0..n_legit-1`` and malicious agents the
remaining ``n_malicious`` indices.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import ConfigError, TopologyError


class Role(str, Enum):
    LEGITIMATE = "legit"
    MALICIOUS = "malicious"


@dataclass(frozen=True, eq=False)
class Topology:
    n_legit: int
    n_malicious: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        adj = np.array(self.adjacency, dtype=bool)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        n = self.n_legit + self.n_malicious
        if adj.shape != (n, n):
            raise TopologyError(f"adjacency shape {adj.shape} does not match {n} agents")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.n_legit == other.n_legit
            and self.n_malicious == other.n_malicious
            and np.array_equal(self.adjacency, other.adjacency)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_agents(self) -> int:
        return self.n_legit + self.n_malicious

    @property
    def legit(self) -> range:
        return range(self.n_legit)

    @property
    def malicious(self) -> range:
        return range(self.n_legit, self.n_agents)

    def role(self, i: int) -> Role:
        self._check(i)
        return Role.LEGITIMATE if i < self.n_legit else Role.MALICIOUS

    def is_legit(self, i: int) -> bool:
        return self.role(i) is Role.LEGITIMATE

    def _check(self, i: int) -> None:
        if not 0 <= i < self.n_agents:
            raise TopologyError(f"agent index {i} out of range 0..{self.n_agents - 1}")

    def neighbors(self, i: int) -> set[int]:
        self._check(i)
        return {int(j) for j in np.flatnonzero(self.adjacency[i])}

    def legit_neighbors(self, i: int) -> set[int]:
        return {j for j in self.neighbors(i) if j < self.n_legit}

    def malicious_neighbors(self, i: int) -> set[int]:
        return {j for j in self.neighbors(i) if j >= self.n_legit}

    def degree(self, i: int) -> int:
        self._check(i)
        return int(self.adjacency[i].sum())

    def edges(self) -> list[tuple[int, int]]:
        """Sorted undirected edge list with ``i < j``."""
        ii, jj = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b)) for a, b in zip(ii, jj)]

    def violations(self) -> list[str]:
        """Human-readable list of broken invariants (empty when valid)."""
        adj = self.adjacency
        problems = []
        if not np.array_equal(adj, adj.T):
            problems.append("adjacency is not symmetric")
        if adj.diagonal().any():
            problems.append("adjacency has self-loops")
        if self.n_legit == 0:
            problems.append("no legitimate agents")
            return problems
        if not is_legit_subgraph_connected(self):
            problems.append("legitimate subgraph is disconnected")
        for i in self.legit:
            if not adj[i, : self.n_legit].any():
                problems.append(f"legitimate agent {i} has no legitimate neighbor")
        for m in self.malicious:
            if not adj[m, : self.n_legit].any():
                problems.append(f"malicious agent {m} has no legitimate neighbor")
        return problems

    def validate(self) -> "Topology":
        problems = self.violations()
        if problems:
            raise TopologyError("; ".join(problems))
        return self

    # -- edge-list text format -------------------------------------------

    def to_edgelist(self) -> str:
        lines = [f"{self.n_legit} {self.n_malicious}"]
        lines += [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "Topology":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ConfigError("edge list must start with 'n_legit n_malicious'")
        n_legit, n_mal = (int(v) for v in rows[0])
        return from_edges(n_legit, n_mal, ((int(a), int(b)) for a, b in rows[1:]))


def from_edges(n_legit: int, n_malicious: int, edges: Iterable[tuple[int, int]]) -> Topology:
    n = n_legit + n_malicious
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise TopologyError(f"invalid edge ({i}, {j})")
        adj[i, j] = adj[j, i] = True
    return Topology(n_legit, n_malicious, adj)


def is_legit_subgraph_connected(topo: Topology) -> bool:
    """BFS over legitimate-legitimate edges only."""
    n = topo.n_legit
    if n == 0:
        return False
    sub = topo.adjacency[:n, :n]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(sub[i] & ~seen):
            seen[j] = True
            queue.append(int(j))
    return bool(seen.all())


def generate_topology(
    n_legit: int,
    n_malicious: int,
    extra_legit_pairs: int,
    malicious_link_prob: float,
    rng: np.random.Generator,
) -> Topology:
    """Legitimate cycle plus random chords; malicious agents attach at random.

    Extra legitimate pairs are drawn among currently non-adjacent legitimate
    pairs, so the legitimate edge count is exactly ``n_legit + extra_legit_pairs``.
    Every pair involving a malicious agent is linked independently with
    ``malicious_link_prob``; a malicious agent left without a legitimate
    neighbor receives one uniformly chosen legitimate neighbor.
    """
    if n_legit < 3:
        raise ConfigError(f"n_legit must be >= 3, got {n_legit}")
    if n_malicious < 0 or extra_legit_pairs < 0:
        raise ConfigError("n_malicious and extra_legit_pairs must be nonnegative")
    if not 0.0 <= malicious_link_prob <= 1.0:
        raise ConfigError(f"malicious_link_prob must lie in [0, 1], got {malicious_link_prob}")
    free_pairs = n_legit * (n_legit - 1) // 2 - n_legit
    if extra_legit_pairs > free_pairs:
        raise ConfigError(f"only {free_pairs} non-cycle legitimate pairs exist, asked for {extra_legit_pairs}")

    n = n_legit + n_malicious
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n_legit):
        j = (i + 1) % n_legit
        adj[i, j] = adj[j, i] = True

    added = 0
    while added < extra_legit_pairs:
        i, j = rng.choice(n_legit, size=2, replace=False)
        if adj[i, j]:
            continue
        adj[i, j] = adj[j, i] = True
        added += 1

    for m in range(n_legit, n):
        coins = rng.random(m) < malicious_link_prob
        adj[m, :m] = coins
        adj[:m, m] = coins
    for m in range(n_legit, n):
        if not adj[m, :n_legit].any():
            i = int(rng.integers(n_legit))
            adj[m, i] = adj[i, m] = True

    return Topology(n_legit, n_malicious, adj).validate()
