"""Trusted neighborhood learning with time-varying thresholds."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, TextIO, Union

import numpy as np

from .errors import ConfigError, TopologyError


@dataclass(frozen=True)
class SqrtLog:
    eps1: float = 0.005

    def __post_init__(self) -> None:
        if self.eps1 <= 0:
            raise ConfigError("SqrtLog threshold needs eps1 > 0")

    def __call__(self, t):
        tp1 = np.asarray(t, dtype=float) + 1.0
        return np.sqrt((1.0 + self.eps1) * tp1 * np.log(tp1))


@dataclass(frozen=True)
class PowerLaw:
    xi: float = 1.0
    gamma: float = 0.75

    def __post_init__(self) -> None:
        if self.xi <= 0 or not 0.5 < self.gamma < 1.0:
            raise ConfigError("PowerLaw threshold needs xi > 0 and gamma in (0.5, 1)")

    def __call__(self, t):
        return self.xi * (np.asarray(t, dtype=float) + 1.0) ** self.gamma


@dataclass(frozen=True)
class LinearGap:
    slope: float

    def __post_init__(self) -> None:
        if self.slope <= 0:
            raise ConfigError("LinearGap threshold needs slope > 0")

    def __call__(self, t):
        return self.slope * (np.asarray(t, dtype=float) + 1.0)


ThresholdSchedule = Union[SqrtLog, PowerLaw, LinearGap]


def threshold(schedule: ThresholdSchedule, t: int) -> float:
    if t < 0:
        raise ValueError("threshold is defined for t >= 0")
    return float(schedule(t))


@dataclass(frozen=True)
class TrustedNeighborhood:
    trusted: frozenset[int]
    most_trusted: int


def trusted_neighborhood(ledger, topo, i: int, xi_t: float) -> TrustedNeighborhood:
    """Neighbors whose aggregate trust is within ``xi_t`` of the best one.

    The most trusted neighbor is the smallest index among the maxima.
    """
    if not topo.is_legit(i):
        raise TopologyError(f"agent {i} is not legitimate")
    nbrs = sorted(topo.neighbors(i))
    if not nbrs:
        raise TopologyError(f"agent {i} has no neighbors")
    beta = np.array([ledger[(i, j)] for j in nbrs])
    best = int(np.argmax(beta))
    top = beta[best]
    trusted = frozenset(j for j, b in zip(nbrs, beta) if top - b <= xi_t)
    return TrustedNeighborhood(trusted, nbrs[best])


def classify_all(
    ledger,
    topo,
    schedule: ThresholdSchedule | Mapping[int, ThresholdSchedule],
    t: int,
) -> dict[int, frozenset[int]]:
    """Trusted neighborhoods for every legitimate agent; per-agent schedules allowed."""
    out = {}
    for i in topo.legit:
        sched = schedule[i] if isinstance(schedule, Mapping) else schedule
        out[i] = trusted_neighborhood(ledger, topo, i, threshold(sched, t)).trusted
    return out


class PairIndex:
    """Flat (observer, neighbor) arrays for vectorized classification.

    Pairs are grouped by observer in increasing order, neighbors sorted.
    """

    def __init__(self, topo):
        obs, nbr = [], []
        for i in topo.legit:
            js = sorted(topo.neighbors(i))
            if not js:
                raise TopologyError(f"legitimate agent {i} has no neighbors")
            obs += [i] * len(js)
            nbr += js
        self.n_legit = topo.n_legit
        self.obs = np.array(obs, dtype=np.intp)
        self.nbr = np.array(nbr, dtype=np.intp)
        self.starts = np.searchsorted(self.obs, np.arange(topo.n_legit))
        self.nbr_is_legit = self.nbr < topo.n_legit
        self.pairs = list(zip(obs, nbr))

    def __len__(self) -> int:
        return self.obs.size

    def trusted_mask(self, beta: np.ndarray, xi_t) -> np.ndarray:
        """Boolean mask over pairs; ``xi_t`` may be scalar or per-observer."""
        top = np.maximum.reduceat(beta, self.starts)
        xi = np.asarray(xi_t, dtype=float)
        if xi.ndim:
            xi = xi[self.obs]
        return (top[self.obs] - beta) <= xi


def write_classification_trace(fh: TextIO, index: PairIndex, trusted: np.ndarray) -> None:
    """CSV rows ``t,i,j,trusted,truth`` from a ``(T, P)`` boolean array."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "i", "j", "trusted", "truth"])
    for t in range(trusted.shape[0]):
        for k, (i, j) in enumerate(index.pairs):
            w.writerow([t, i, j, int(trusted[t, k]), "legit" if index.nbr_is_legit[k] else "malicious"])
