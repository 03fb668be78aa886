"""Single runs, Monte Carlo batches, and empirical-versus-analytical comparison."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bounds as B
from .attack import AttackPolicy, SoftmaxDecay, cumulative_min_probability, static_consensus_matrix
from .consensus import NominalWeights, build_nominal, weights_from_mask
from .detect import PairIndex, SqrtLog, ThresholdSchedule
from .errors import ConfigError, InvariantError
from .rng import TOPOLOGY, run_streams, stream
from .topology import Topology, generate_topology
from .trust import PAPER_TRUST, TrustModel

DECOMPOSE_TOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    n_legit: int = 20
    n_malicious: int = 30
    extra_legit_pairs: int = 20
    malicious_link_prob: float = 0.2
    trust: TrustModel = PAPER_TRUST
    policy: AttackPolicy = field(default_factory=SoftmaxDecay)
    schedule: ThresholdSchedule = field(default_factory=SqrtLog)
    kappa: float = 10.0
    eta: float = 4.0
    T0: int = 25
    horizon: int = 200
    n_runs: int = 100
    seed: int = 0
    resample_topology: bool = False
    delta: float = 0.1
    eps2: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.T0 < 1:
            raise ConfigError(f"T0 must be at least 1, got {self.T0}")
        if self.horizon < self.T0:
            raise ConfigError(f"horizon {self.horizon} precedes T0 {self.T0}")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be at least 1")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.eps2 is not None and not self.eps2 > 0:
            raise ConfigError("eps2 must be positive")

    @property
    def bound_eps2(self) -> float:
        if self.eps2 is not None:
            return self.eps2
        return self.policy.eps2 if isinstance(self.policy, SoftmaxDecay) else 5.0

    @property
    def bound_eps1(self) -> float:
        return self.schedule.eps1 if isinstance(self.schedule, SqrtLog) else 0.005

    def bound_inputs(self, T0: int | None = None) -> B.BoundInputs:
        return B.BoundInputs(
            n_legit=self.n_legit,
            n_malicious=self.n_malicious,
            gap=self.trust.gap,
            eps1=self.bound_eps1,
            eps2=self.bound_eps2,
            eta=self.eta,
            kappa=self.kappa,
            delta=self.delta,
            T0=self.T0 if T0 is None else T0,
        )

    def topology(self, run_index: int = 0) -> Topology:
        seed = self.seed + run_index if self.resample_topology else self.seed
        return generate_topology(
            self.n_legit, self.n_malicious, self.extra_legit_pairs, self.malicious_link_prob, stream(seed, TOPOLOGY)
        )


@dataclass
class RunTrace:
    """Full per-step record of one run; arrays have ``horizon + 1`` rows."""

    index: PairIndex
    x: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    trusted: np.ndarray
    p: np.ndarray
    f: np.ndarray


@dataclass
class RunMetrics:
    excluded_legit: np.ndarray
    included_malicious: np.ndarray
    n_legit_pairs: int
    n_malicious_pairs: int
    attack_rate: np.ndarray
    disagreement: np.ndarray
    deviation: np.ndarray
    nu_distance: np.ndarray
    correct: np.ndarray
    T_f: Optional[int]
    tau: Optional[int]
    z: float
    z_nu: float
    nominal_value: float
    decompose_error: float
    rate_ok: Optional[bool]

    @property
    def legit_exclusion(self) -> np.ndarray:
        return self.excluded_legit / max(self.n_legit_pairs, 1)

    @property
    def malicious_inclusion(self) -> np.ndarray:
        return self.included_malicious / max(self.n_malicious_pairs, 1)

    @property
    def horizon_deviation(self) -> float:
        """Max deviation at the final step, standing in for the limsup."""
        return float(self.deviation[-1])


def empirical_tf(correct: Sequence[bool]) -> Optional[int]:
    """Earliest t with every later step correctly classified; None when censored."""
    correct = np.asarray(correct, dtype=bool)
    wrong = np.flatnonzero(~correct)
    if wrong.size == 0:
        return 0
    last = int(wrong[-1])
    return None if last == correct.size - 1 else last + 1


def run_once(
    config: SimConfig,
    run_index: int = 0,
    topology: Topology | None = None,
    nominal: NominalWeights | None = None,
) -> tuple[RunTrace, RunMetrics]:
    topo = topology if topology is not None else config.topology(run_index)
    nominal = nominal if nominal is not None else build_nominal(topo, config.kappa)
    rs = run_streams(config.seed + run_index)
    index = PairIndex(topo)
    nL, nM, N = topo.n_legit, topo.n_malicious, topo.n_agents
    H, T0, eta, P = config.horizon, config.T0, config.eta, len(index)
    mal_pair = ~index.nbr_is_legit
    mal_col = np.where(mal_pair, index.nbr - nL, 0)
    legit_pair = index.nbr_is_legit

    x0 = rs.initial.uniform(-eta, eta, N)
    S = static_consensus_matrix(topo)
    z0 = float(nominal.nu @ x0[:nL])

    xs = np.empty((H + 1, N))
    alphas = np.empty((H + 1, P))
    betas = np.empty((H + 1, P))
    trusted = np.empty((H + 1, P), dtype=bool)
    ps = np.empty((H + 1, nM))
    fs = np.empty((H + 1, nM), dtype=bool)

    x_prev = x0.copy()
    x_L = x0[:nL].copy()
    x_tilde, phi = x_L.copy(), np.zeros(nL)
    beta = np.zeros(P)
    n_attacks = np.zeros(nM)
    for t in range(H + 1):
        p = np.broadcast_to(config.policy.probability(t, n_attacks), (nM,))
        f = rs.attack.random(nM) < p
        n_attacks += f
        x_M = np.where(f, eta, np.clip(S @ x_prev, -eta, eta))
        x_t = np.concatenate([x_L, x_M])

        attacking = mal_pair & f[mal_col] if nM else np.zeros(P, dtype=bool)
        alpha = config.trust.observe(attacking, rs.trust.random(P))
        beta = beta + alpha
        mask = index.trusted_mask(beta, config.schedule(t))

        xs[t], alphas[t], betas[t], trusted[t], ps[t], fs[t] = x_t, alpha, beta, mask, p, f

        if T0 - 1 <= t < H:
            w, self_w = weights_from_mask(index, mask, config.kappa)
            if not (self_w > 0).all():
                raise InvariantError(f"nonpositive self weight at t={t}")
            x_L = self_w * x_L + np.bincount(index.obs, w * x_t[index.nbr], minlength=nL)
            wl = np.where(legit_pair, w, 0.0)
            legit_nbr = np.where(legit_pair, index.nbr, 0)
            x_tilde = self_w * x_tilde + np.bincount(index.obs, wl * x_tilde[legit_nbr], minlength=nL)
            phi = (
                self_w * phi
                + np.bincount(index.obs, wl * phi[legit_nbr], minlength=nL)
                + np.bincount(index.obs, np.where(mal_pair, w, 0.0) * x_t[index.nbr], minlength=nL)
            )
            if np.abs(x_L).max() > eta * (1 + 1e-12):
                raise InvariantError(f"legitimate value left [-{eta}, {eta}] at t={t + 1}")
        x_prev = x_t

    trace = RunTrace(index, xs, alphas, betas, trusted, ps, fs)
    return trace, _metrics(trace, nominal, z0, x_tilde + phi, config)


def _metrics(trace: RunTrace, nominal: NominalWeights, z0: float, recomposed: np.ndarray, config: SimConfig) -> RunMetrics:
    index = trace.index
    nL, H, T0 = index.n_legit, config.horizon, config.T0
    legit_pair = index.nbr_is_legit
    x_L = trace.x[:, :nL]
    correct = (trace.trusted == legit_pair).all(axis=1)

    z = float(x_L[-1].mean())
    z_nu = float(nominal.nu @ x_L[-1])
    diff = x_L - z_nu
    nu_distance = np.sqrt((diff * diff) @ nominal.nu)

    # weights applied at steps T0-1..H-1; nominal from tau onward
    applied = correct[T0 - 1 : H]
    wrong = np.flatnonzero(~applied)
    tau = None if (wrong.size and wrong[-1] == applied.size - 1) else T0 - 1 + (int(wrong[-1]) + 1 if wrong.size else 0)
    rate_ok = None
    if tau is not None and tau < H:
        ts = np.arange(tau + 1, H + 1)
        bound = 2.0 * config.eta * (tau - T0 + 2) * nominal.rho2 ** (ts - tau)
        rate_ok = bool((nu_distance[ts] <= bound * (1 + 1e-9) + 1e-12).all())

    return RunMetrics(
        excluded_legit=(~trace.trusted[:, legit_pair]).sum(axis=1),
        included_malicious=trace.trusted[:, ~legit_pair].sum(axis=1),
        n_legit_pairs=int(legit_pair.sum()),
        n_malicious_pairs=int((~legit_pair).sum()),
        attack_rate=trace.f.mean(axis=1) if trace.f.shape[1] else np.zeros(H + 1),
        disagreement=np.abs(x_L - x_L.mean(axis=1, keepdims=True)).max(axis=1),
        deviation=np.abs(x_L - z0).max(axis=1),
        nu_distance=nu_distance,
        correct=correct,
        T_f=empirical_tf(correct),
        tau=tau,
        z=z,
        z_nu=z_nu,
        nominal_value=z0,
        decompose_error=float(np.abs(x_L[-1] - recomposed).max()),
        rate_ok=rate_ok,
    )


SERIES = ("legit_exclusion", "malicious_inclusion", "attack_rate", "disagreement", "deviation", "nu_distance")


@dataclass
class BatchResult:
    config: SimConfig
    topology: Topology
    nominal: NominalWeights
    runs: list[RunMetrics]

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    def stack(self, name: str) -> np.ndarray:
        return np.stack([getattr(r, name) for r in self.runs])

    def mean(self, name: str) -> np.ndarray:
        return self.stack(name).mean(axis=0)

    def stderr(self, name: str) -> np.ndarray:
        a = self.stack(name)
        if a.shape[0] < 2:
            return np.zeros(a.shape[1:])
        return a.std(axis=0, ddof=1) / math.sqrt(a.shape[0])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TRUSTNET_THREADS", "1")))
    except ValueError:
        raise ConfigError("TRUSTNET_THREADS must be an integer") from None


def run_batch(config: SimConfig, n_runs: int | None = None) -> BatchResult:
    """Runs ``0..n_runs-1`` with seeds ``config.seed + r``; results kept in run order."""
    n = config.n_runs if n_runs is None else n_runs
    if n < 1:
        raise ConfigError("n_runs must be at least 1")
    topo = config.topology(0)
    nominal = build_nominal(topo, config.kappa)

    def one(r: int) -> RunMetrics:
        if config.resample_topology:
            return run_once(config, r)[1]
        return run_once(config, r, topo, nominal)[1]

    threads = _threads()
    if threads == 1:
        runs = [one(r) for r in range(n)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(one, range(n)))
    return BatchResult(config, topo, nominal, runs)


@dataclass(frozen=True)
class ComparisonRow:
    bound: str
    t: int
    empirical: float
    stderr: float
    analytical: float
    passed: bool


def _row(name: str, t: int, emp: float, se: float, bound: float, slack: float = 3.0) -> ComparisonRow:
    emp, se, bound = float(emp), float(se), float(bound)
    return ComparisonRow(name, int(t), emp, se, bound, emp <= bound + slack * se)


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def compare_to_bounds(batch: BatchResult, grid: Sequence[int], bound_scale: float = 1.0) -> list[ComparisonRow]:
    """Empirical frequencies against analytical bounds, pass at +3 standard errors.

    ``bound_scale`` multiplies every analytical value; it exists to force
    failures in tests.
    """
    config, topo = batch.config, batch.topology
    if topo.n_legit != config.n_legit or topo.n_malicious != config.n_malicious:
        raise ConfigError("batch topology does not match its configuration")
    H = config.horizon
    if any(t < 0 or t > H for t in grid):
        raise ConfigError(f"grid points must lie in [0, {H}]")
    inputs = config.bound_inputs()
    index = PairIndex(topo)
    deg = np.array([topo.degree(i) for i in topo.legit])
    legit_deg = deg[index.obs[index.nbr_is_legit]]
    n = batch.n_runs
    rows: list[ComparisonRow] = []
    excl, excl_se = batch.mean("legit_exclusion"), batch.stderr("legit_exclusion")
    has_mal = bool((~index.nbr_is_legit).any())
    if has_mal:
        incl, incl_se = batch.mean("malicious_inclusion"), batch.stderr("malicious_inclusion")
    T_f = [r.T_f for r in batch.runs]

    for t in grid:
        xi = float(config.schedule(t))
        per_pair = np.minimum(1.0, legit_deg * math.exp(-xi * xi / (2.0 * (t + 1))))
        rows.append(_row("legit_misclass", t, excl[t], excl_se[t], bound_scale * float(per_pair.mean())))
        if has_mal:
            cum_p = cumulative_min_probability(config.policy, t)
            mb = B.malicious_misclass_bound(inputs.gap, cum_p, xi, t).value
            rows.append(_row("malicious_misclass", t, incl[t], incl_se[t], bound_scale * mb))
        if t >= 1:
            p = float(np.mean([tf is None or tf >= t for tf in T_f]))
            tb = min(1.0, B.tf_tail_bound(inputs, t))
            rows.append(_row("tf_tail", t, p, _binomial_se(p, n), bound_scale * tb))

    if config.T0 >= 2:
        g_L, g_M = B.g_functions(inputs)
        d_max = B.deviation_bound(inputs, g_L, g_M)
        p = float(np.mean([r.horizon_deviation > bound_scale * d_max for r in batch.runs]))
        rows.append(_row("deviation", H, p, _binomial_se(p, n), config.delta))
    eligible = [r.rate_ok for r in batch.runs if r.rate_ok is not None]
    if eligible:
        rows.append(_row("rate", H, 1.0 - float(np.mean(eligible)), 0.0, 0.0))
    rows.append(_row("decompose", H, max(r.decompose_error for r in batch.runs), 0.0, DECOMPOSE_TOL))
    return rows
