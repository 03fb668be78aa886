"""Attack policies of malicious agents and the values they transmit."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO, Union

import numpy as np

from .errors import ConfigError


def cumulative_floor(eps2: float, t):
    """sqrt((1+eps2)(t+1) ln(t+1)); zero at t = 0 and for t = -1."""
    t = np.asarray(t, dtype=float)
    tp1 = np.maximum(t + 1.0, 1.0)
    out = np.sqrt((1.0 + eps2) * tp1 * np.log(tp1))
    return float(out) if out.ndim == 0 else out


def floor_increment(eps2: float, t):
    """Forward difference of :func:`cumulative_floor`, clamped to [0, 1]."""
    t = np.asarray(t, dtype=float)
    raw = np.asarray(cumulative_floor(eps2, t)) - np.asarray(cumulative_floor(eps2, t - 1.0))
    out = np.clip(raw, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Stationary:
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"attack probability {self.p} must lie in [0, 1]")

    def probability(self, t: int, n_attacks):
        return np.full(np.shape(n_attacks), float(self.p)) if np.ndim(n_attacks) else float(self.p)

    def min_probability(self, t: int) -> float:
        return float(self.p)


@dataclass(frozen=True)
class Persistent(Stationary):
    p: float = field(default=1.0, init=False)


@dataclass(frozen=True)
class SoftmaxDecay:
    """Attack less after attacking a lot: ``min(floor(t) + exp(-r1 * sum f), 1)``."""

    r1: float = 0.8
    eps2: float = 5.0

    def __post_init__(self) -> None:
        if self.r1 <= 0 or self.eps2 <= 0:
            raise ConfigError("softmax decay needs r1 > 0 and eps2 > 0")

    def probability(self, t: int, n_attacks):
        p = floor_increment(self.eps2, t) + np.exp(-self.r1 * np.asarray(n_attacks, dtype=float))
        p = np.minimum(p, 1.0)
        return float(p) if p.ndim == 0 else p

    def min_probability(self, t: int) -> float:
        # at most t attacks precede step t
        return float(self.probability(t, t))


@dataclass(frozen=True)
class LogisticSchedule:
    """History-free schedule ``min(p_bar + ln(1 + exp(-r2 t)), 1)``."""

    p_bar: float = 0.3
    r2: float = 0.005

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_bar <= 1.0 or self.r2 <= 0:
            raise ConfigError("logistic schedule needs p_bar in [0, 1] and r2 > 0")

    def probability(self, t: int, n_attacks):
        p = min(self.p_bar + math.log1p(math.exp(-self.r2 * t)), 1.0)
        return np.full(np.shape(n_attacks), p) if np.ndim(n_attacks) else p

    def min_probability(self, t: int) -> float:
        return float(self.probability(t, 0))


AttackPolicy = Union[Stationary, Persistent, SoftmaxDecay, LogisticSchedule]


def policy_name(policy: AttackPolicy) -> str:
    return {
        Persistent: "persistent",
        Stationary: "stationary",
        SoftmaxDecay: "softmax_decay",
        LogisticSchedule: "logistic_schedule",
    }[type(policy)]


def cumulative_min_probability(policy: AttackPolicy, t: int) -> float:
    """Sum over k = 0..t of the smallest conditional attack probability."""
    return float(sum(policy.min_probability(k) for k in range(t + 1)))


@dataclass
class AttackHistory:
    decisions: list[int] = field(default_factory=list)
    total: int = field(init=False)

    def __post_init__(self) -> None:
        self.total = sum(self.decisions)

    def __len__(self) -> int:
        return len(self.decisions)

    def append(self, f: int) -> None:
        self.decisions.append(int(f))
        self.total += int(f)


def attack_probability(policy: AttackPolicy, history: AttackHistory, t: int) -> float:
    if len(history) != t:
        raise ValueError(f"history has {len(history)} decisions, expected {t}")
    return float(policy.probability(t, history.total))


def decide_attack(policy: AttackPolicy, history: AttackHistory, t: int, rng: np.random.Generator) -> int:
    p = attack_probability(policy, history, t)
    f = int(rng.random() < p)
    history.append(f)
    return f


def malicious_value(
    attacking: bool,
    eta: float,
    own_prev: float,
    neighbor_prevs: Sequence[float],
    static_weights: Sequence[float] | None = None,
) -> float:
    """Boundary value ``eta`` when attacking, else a static convex combination.

    ``static_weights`` lists the self weight first, then one weight per
    neighbor; uniform ``1/(deg+1)`` by default.
    """
    if attacking:
        return float(eta)
    values = np.concatenate(([own_prev], np.asarray(neighbor_prevs, dtype=float)))
    if static_weights is None:
        w = np.full(values.size, 1.0 / values.size)
    else:
        w = np.asarray(static_weights, dtype=float)
        if w.shape != values.shape or w[0] <= 0 or (w < 0).any() or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
            raise ConfigError("static weights must be a convex combination with positive self weight")
    return float(np.clip(w @ values, -eta, eta))


def static_consensus_matrix(topo) -> np.ndarray:
    """Rows of uniform ``1/(deg+1)`` weights for malicious agents over all agents."""
    m_idx = np.arange(topo.n_legit, topo.n_agents)
    S = topo.adjacency[m_idx].astype(float)
    S[np.arange(m_idx.size), m_idx] = 1.0
    S /= S.sum(axis=1, keepdims=True)
    return S


def write_attack_trace(fh: TextIO, malicious: Sequence[int], p: np.ndarray, f: np.ndarray) -> None:
    """CSV rows ``t,m,p,f`` from ``(T, M)`` arrays."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "m", "p", "f"])
    for t in range(p.shape[0]):
        for k, m in enumerate(malicious):
            w.writerow([t, m, repr(float(p[t, k])), int(f[t, k])])
