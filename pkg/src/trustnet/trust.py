"""Stochastic trust observations and the aggregate trust ledger."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO, Union

import numpy as np

from .errors import ConfigError, ProtocolError


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ConfigError(f"uniform trust interval [{self.low}, {self.high}] must lie inside [0, 1]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def from_uniform(self, u):
        return self.low + (self.high - self.low) * u


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"Bernoulli trust mean {self.p} must lie in [0, 1]")

    @property
    def mean(self) -> float:
        return self.p

    def from_uniform(self, u):
        return (np.asarray(u) < self.p).astype(float)


TrustLaw = Union[Uniform, Bernoulli]


@dataclass(frozen=True)
class TrustModel:
    """Law of observations for trustworthy transmissions and for attacks."""

    legit: TrustLaw
    attack: TrustLaw

    def __post_init__(self) -> None:
        if not self.legit.mean > self.attack.mean:
            raise ConfigError(
                f"legitimate trust mean {self.legit.mean} must exceed attack mean {self.attack.mean}"
            )

    @property
    def e_legit(self) -> float:
        return self.legit.mean

    @property
    def e_malicious(self) -> float:
        return self.attack.mean

    @property
    def gap(self) -> float:
        return self.legit.mean - self.attack.mean

    def observe(self, attacking, u):
        """Map uniforms ``u`` to observations; ``attacking`` selects the attack law."""
        attacking = np.asarray(attacking, dtype=bool)
        return np.where(attacking, self.attack.from_uniform(u), self.legit.from_uniform(u))


PAPER_TRUST = TrustModel(Uniform(0.4, 1.0), Uniform(0.0, 0.6))


def sample_trust(model: TrustModel, sender_attacking: bool, rng: np.random.Generator) -> float:
    return float(model.observe(sender_attacking, rng.random()))


Pair = tuple[int, int]


class TrustLedger:
    """Running sums ``beta[i, j]`` of trust observations for tracked pairs.

    The ledger starts at ``t = -1`` (nothing observed).  Each call to
    :meth:`accumulate` must supply exactly one observation per tracked pair
    for the next time step.
    """

    def __init__(self, pairs: Iterable[Pair]):
        self.pairs: list[Pair] = [(int(i), int(j)) for i, j in pairs]
        self.index = {p: k for k, p in enumerate(self.pairs)}
        if len(self.index) != len(self.pairs):
            raise ProtocolError("duplicate pairs in ledger")
        self.beta = np.zeros(len(self.pairs))
        self.t = -1

    @classmethod
    def for_topology(cls, topo) -> "TrustLedger":
        return cls((i, j) for i in topo.legit for j in sorted(topo.neighbors(i)))

    def __getitem__(self, pair: Pair) -> float:
        return float(self.beta[self.index[pair]])

    def accumulate(self, observations: Mapping[Pair, float], t: int | None = None) -> "TrustLedger":
        if set(observations) != set(self.index):
            missing = set(self.index) - set(observations)
            extra = set(observations) - set(self.index)
            raise ProtocolError(f"observations mismatch: missing={sorted(missing)[:5]} extra={sorted(extra)[:5]}")
        alpha = np.array([observations[p] for p in self.pairs], dtype=float)
        return self.accumulate_array(alpha, t)

    def accumulate_array(self, alpha: np.ndarray, t: int | None = None) -> "TrustLedger":
        if t is not None and t != self.t + 1:
            raise ProtocolError(f"ledger at t={self.t} cannot accept observations for t={t}")
        if alpha.shape != self.beta.shape:
            raise ProtocolError(f"expected {self.beta.size} observations, got {alpha.size}")
        self.beta += alpha
        self.t += 1
        return self


def write_trust_trace(fh: TextIO, pairs: list[Pair], alpha: np.ndarray, beta: np.ndarray) -> None:
    """CSV rows ``t,i,j,alpha,beta`` from ``(T, P)`` arrays."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "i", "j", "alpha", "beta"])
    for t in range(alpha.shape[0]):
        for k, (i, j) in enumerate(pairs):
            w.writerow([t, i, j, repr(float(alpha[t, k])), repr(float(beta[t, k]))])
