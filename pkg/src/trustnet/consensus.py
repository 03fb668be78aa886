"""Trust-filtered consensus weights, the nominal matrix and trajectory algebra."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, TextIO

import numpy as np

from .errors import InvariantError, ModelViolation, ProtocolError, TopologyError
from .topology import Topology, is_legit_subgraph_connected

ROW_TOL = 1e-12


@dataclass(frozen=True)
class WeightAssignment:
    """Rows of legitimate agents split into legitimate and malicious columns."""

    W_L: np.ndarray
    W_M: np.ndarray
    kappa: float
    n_w: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.W_L, self.W_M])


def _n_w(n_trusted, kappa: float):
    return np.maximum(np.asarray(n_trusted, dtype=float) + 1.0, kappa)


def build_weights(neighborhoods: Mapping[int, Sequence[int]], topo: Topology, kappa: float) -> WeightAssignment:
    """Equal weight ``1/n_w`` per trusted neighbor, the remainder on self."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    nL = topo.n_legit
    W = np.zeros((nL, topo.n_agents))
    n_w = np.zeros(nL)
    for i in topo.legit:
        trusted = neighborhoods.get(i)
        if not trusted:
            raise ProtocolError(f"agent {i} has an empty trusted neighborhood")
        nbrs = topo.neighbors(i)
        if not set(trusted) <= nbrs:
            raise TopologyError(f"trusted set of agent {i} is not a subset of its neighbors")
        n_w[i] = _n_w(len(trusted), kappa)
        for j in trusted:
            W[i, j] = 1.0 / n_w[i]
        W[i, i] = 1.0 - len(trusted) / n_w[i]
    return WeightAssignment(W[:, :nL], W[:, nL:], kappa, n_w)


def weights_from_mask(index, trusted: np.ndarray, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized weights: per-pair weights and per-observer self weights."""
    counts = np.bincount(index.obs, weights=trusted, minlength=index.n_legit)
    n_w = _n_w(counts, kappa)
    w = np.where(trusted, 1.0 / n_w[index.obs], 0.0)
    return w, 1.0 - counts / n_w


def dense_weights(index, w: np.ndarray, self_w: np.ndarray, n_agents: int) -> WeightAssignment:
    nL = index.n_legit
    W = np.zeros((nL, n_agents))
    W[index.obs, index.nbr] = w
    W[np.arange(nL), np.arange(nL)] = self_w
    n_w = np.zeros(nL)  # not recoverable from weights alone when nothing is trusted
    return WeightAssignment(W[:, :nL], W[:, nL:], float("nan"), n_w)


@dataclass(frozen=True)
class NominalWeights:
    matrix: np.ndarray
    nu: np.ndarray
    rho2: float

    @property
    def residual(self) -> float:
        return float(np.abs(self.nu @ self.matrix - self.nu).max())


def nominal_matrix(topo: Topology, kappa: float) -> np.ndarray:
    nL = topo.n_legit
    A = topo.adjacency[:nL, :nL].astype(float)
    deg = A.sum(axis=1)
    n_w = _n_w(deg, kappa)
    W = A / n_w[:, None]
    W[np.arange(nL), np.arange(nL)] = 1.0 - deg / n_w
    return W


def perron_vector(W: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Stochastic left eigenvector for eigenvalue 1 by power iteration."""
    n = W.shape[0]
    nu = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = nu @ W
        nxt /= nxt.sum()
        if np.abs(nxt @ W - nxt).max() <= tol:
            return nxt
        nu = nxt
    raise ModelViolation(f"power iteration did not reach residual {tol} in {max_iter} steps")


def second_eigenvalue_modulus(W: np.ndarray) -> float:
    if W.shape[0] < 2:
        return 0.0
    mods = np.sort(np.abs(np.linalg.eigvals(W)))[::-1]
    return float(mods[1])


def build_nominal(topo: Topology, kappa: float) -> NominalWeights:
    if not is_legit_subgraph_connected(topo):
        raise ModelViolation("legitimate subgraph is disconnected; nominal product has no rank-one limit")
    W = nominal_matrix(topo, kappa)
    nu = perron_vector(W)
    if not (nu > 0).all():
        raise ModelViolation("Perron vector is not strictly positive")
    return NominalWeights(W, nu, second_eigenvalue_modulus(W))


def nominal_limit(nominal: NominalWeights, x0_legit) -> float:
    return float(nominal.nu @ np.asarray(x0_legit, dtype=float))


@dataclass(frozen=True)
class SimState:
    """Values of all agents at time ``t``.

    Malicious entries hold the values most recently transmitted.
    """

    x: np.ndarray
    t: int
    T0: int
    eta: float


def check_rows(wa: WeightAssignment) -> None:
    rows = wa.W_L.sum(axis=1) + wa.W_M.sum(axis=1)
    if np.abs(rows - 1.0).max() > ROW_TOL:
        raise InvariantError(f"weight rows deviate from 1 by {np.abs(rows - 1.0).max():.3e}")
    if not (np.diag(wa.W_L) > 0).all():
        raise InvariantError("nonpositive self weight")


def step(state: SimState, wa: WeightAssignment, malicious_values) -> SimState:
    nL = wa.W_L.shape[0]
    x = state.x.copy()
    x_M = np.asarray(malicious_values, dtype=float)
    x[nL:] = x_M
    if state.t >= state.T0 - 1:
        check_rows(wa)
        x[:nL] = wa.W_L @ state.x[:nL] + wa.W_M @ x_M
        if np.abs(x[:nL]).max() > state.eta * (1 + 1e-12):
            raise InvariantError("legitimate value left [-eta, eta]")
    return replace(state, x=x, t=state.t + 1)


def decompose(
    W_L_trace: Sequence[np.ndarray],
    W_M_trace: Sequence[np.ndarray],
    x_M_trace: Sequence[np.ndarray],
    x_L0,
    T0: int,
    t: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x_L(T0, t)`` into legitimate mixing and malicious influence.

    Traces hold entries for k = T0-1, ..., t-1 in order.
    """
    n_steps = t - T0 + 1
    if n_steps < 0:
        raise ProtocolError(f"t={t} precedes T0-1={T0 - 1}")
    if not len(W_L_trace) == len(W_M_trace) == len(x_M_trace) == n_steps:
        raise ProtocolError(
            f"trace lengths {len(W_L_trace)}, {len(W_M_trace)}, {len(x_M_trace)} do not cover {n_steps} steps"
        )
    x_tilde = np.asarray(x_L0, dtype=float).copy()
    phi = np.zeros_like(x_tilde)
    for W_L, W_M, x_M in zip(W_L_trace, W_M_trace, x_M_trace):
        x_tilde = W_L @ x_tilde
        phi = W_L @ phi + W_M @ x_M
    return x_tilde, phi


def write_trajectory(fh: TextIO, x: np.ndarray, n_legit: int) -> None:
    """CSV rows ``t,agent,value,role`` from a ``(T, N)`` array."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "agent", "value", "role"])
    for t in range(x.shape[0]):
        for a in range(x.shape[1]):
            w.writerow([t, a, repr(float(x[t, a])), "legit" if a < n_legit else "malicious"])
