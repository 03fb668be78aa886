"""Closed-form probability bounds for detection, deviation and convergence rate.

Probability bounds are returned raw (they may exceed 1); use
:func:`clip_probability` for display.  Bounds whose derivation needs a
positivity precondition return a :class:`Bound` carrying a ``vacuous`` flag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .attack import AttackPolicy
from .detect import ThresholdSchedule
from .errors import ConfigError

ZETA_TOL = 1e-10
ZETA_REL_TOL = 1e-12


class ZetaResult(NamedTuple):
    value: float
    lower: float
    upper: float
    terms: int


def _power_gap(a: float, b: float, c: float) -> float:
    """(a^(1-c) - b^(1-c)) / (c-1) for 0 < a <= b, accurate for c near 1."""
    return -(a ** (1.0 - c)) * math.expm1((1.0 - c) * math.log(b / a)) / (c - 1.0)


def _tail_bracket(c: float, a: float) -> tuple[float, float]:
    """Bracket for sum_{k>=0} (a+k)^-c using convexity of x^-c.

    Trapezoid sums overestimate the integral and midpoint sums underestimate
    it, which gives ``I(a) + a^-c/2 <= tail <= I(a - 1/2)``.
    """
    integral = a ** (1.0 - c) / (c - 1.0)
    lower = integral + 0.5 * a ** (-c)
    upper = integral + _power_gap(a - 0.5, a, c)
    return lower, upper


def hurwitz_zeta_bracket(c: float, t: float, tol: float = ZETA_TOL) -> ZetaResult:
    if not c > 1.0:
        raise ValueError(f"Hurwitz zeta diverges for c={c} <= 1")
    if not t > 0.0:
        raise ValueError(f"Hurwitz zeta needs t > 0, got {t}")
    K = max(0, math.ceil(1.0 - t))
    # the initial lower bracket bounds the whole sum from below
    target = min(tol, ZETA_REL_TOL * _tail_bracket(c, K + t)[0])
    while True:
        lo, hi = _tail_bracket(c, K + t)
        if hi - lo <= target:
            break
        K = max(1, 2 * K)
    head = float(np.sum((np.arange(K, dtype=float) + t) ** (-c))) if K else 0.0
    return ZetaResult(head + 0.5 * (lo + hi), head + lo, head + hi, K)


def hurwitz_zeta(c: float, t: float, tol: float = ZETA_TOL) -> float:
    """sum_{k>=0} (k+t)^-c with absolute error at most ``tol`` and relative error at most 1e-12."""
    return hurwitz_zeta_bracket(c, t, tol).value


class Bound(NamedTuple):
    value: float
    vacuous: bool


def clip_probability(value: float) -> Bound:
    return Bound(min(value, 1.0), value >= 1.0)


def pairwise_tail_bound(r: float, t: int) -> float:
    """Bound on P(beta_ij(t) - beta_il(t) > r) for a legitimate l, any other j."""
    if r <= 0:
        raise ValueError("pairwise tail bound needs r > 0")
    return math.exp(-r * r / (2.0 * (t + 1)))


def malicious_tail_bound(r: float, gap: float, cum_p: float, t: int) -> Bound:
    """Bound on P(beta_im(t) - beta_il(t) > r) for r < 0."""
    s = gap * cum_p + r
    if s <= 0:
        return Bound(1.0, True)
    return Bound(math.exp(-s * s / (2.0 * (t + 1))), False)


def legit_misclass_bound(deg_i: int, xi_t: float, t: int) -> float:
    """Bound on P(j not trusted) for a legitimate neighbor j (raw, may exceed 1)."""
    return deg_i * math.exp(-xi_t * xi_t / (2.0 * (t + 1)))


def malicious_misclass_bound(gap: float, cum_p: float, xi_t: float, t: int) -> Bound:
    """Bound on P(m trusted) for a malicious neighbor m."""
    s = gap * cum_p - xi_t
    if s <= 0:
        return Bound(1.0, True)
    return Bound(math.exp(-s * s / (2.0 * (t + 1))), False)


def appendix_concentration_bound(q: float) -> float:
    """Time-free tail exp(-q^2/2) of beta_im - beta_il above its drift plus q*sqrt(t+1)."""
    if q <= 0:
        raise ValueError("q must be positive")
    return math.exp(-q * q / 2.0)


@dataclass(frozen=True)
class BoundInputs:
    n_legit: int
    n_malicious: int
    gap: float
    eps1: float
    eps2: float
    eta: float = 4.0
    kappa: float = 10.0
    delta: float = 0.1
    T0: int = 25

    def __post_init__(self) -> None:
        if self.n_legit < 1 or self.n_malicious < 0:
            raise ConfigError("need at least one legitimate agent and a nonnegative malicious count")
        if not self.gap > 0:
            raise ConfigError(f"trust gap must be positive, got {self.gap}")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ConfigError("eps1 and eps2 must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.eta <= 0 or self.kappa <= 0:
            raise ConfigError("eta and kappa must be positive")

    @property
    def n_total(self) -> int:
        return self.n_legit + self.n_malicious


def _union_zeta(inputs: BoundInputs, offset: float) -> float:
    L, M, N = inputs.n_legit, inputs.n_malicious, inputs.n_total
    legit = L * L * N * hurwitz_zeta(1.0 + inputs.eps1, offset)
    mal = L * M * hurwitz_zeta(1.0 + inputs.eps2, offset) if M else 0.0
    return legit + mal


def tf_tail_bound(inputs: BoundInputs, t: int) -> float:
    """Bound on P(T_f > t-1) (raw)."""
    if t < 1:
        raise ValueError("T_f tail bound needs t >= 1")
    return _union_zeta(inputs, t)


def g_functions(inputs: BoundInputs, T0: int | None = None) -> tuple[float, float]:
    T0 = inputs.T0 if T0 is None else T0
    if T0 < 2:
        raise ValueError("g functions need T0 >= 2")
    g_M = inputs.n_legit * inputs.n_malicious * hurwitz_zeta(1.0 + inputs.eps2, T0 - 1) if inputs.n_malicious else 0.0
    return _union_zeta(inputs, T0 - 1), g_M


def deviation_bound(inputs: BoundInputs, g_L: float, g_M: float) -> float:
    eta, d, k = inputs.eta, inputs.delta, inputs.kappa
    return 2.0 * (2.0 * eta / d * g_L + eta / (k * d) * g_M)


class RateBound(NamedTuple):
    value: float
    tau: int
    probability_floor: float | None


def rate_bound(eta: float, T0: int, t: int, rho2: float, inputs: BoundInputs | None = None) -> RateBound:
    """min over tau in [T0-1, t] of 2 eta (tau-T0+2) rho2^(t-tau)."""
    if not 0 <= rho2 < 1:
        raise ValueError(f"rho2 must lie in [0, 1), got {rho2}")
    if t < T0 - 1:
        raise ValueError(f"t={t} precedes T0-1={T0 - 1}")
    tau = np.arange(T0 - 1, t + 1)
    vals = 2.0 * eta * (tau - T0 + 2) * np.power(rho2, (t - tau).astype(float))
    k = int(np.argmin(vals))
    floor = None if inputs is None else 1.0 - _union_zeta(inputs, T0 - 1)
    return RateBound(float(vals[k]), int(tau[k]), floor)


def expected_rate_bound(eta: float, T0: int, t: int, rho2: float, inputs: BoundInputs) -> float:
    return rate_bound(eta, T0, t, rho2).value + 2.0 * eta * _union_zeta(inputs, T0 - 1)


def nu_norm(z, nu) -> float:
    z = np.asarray(z, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if z.shape != nu.shape:
        raise ValueError(f"dimension mismatch: {z.shape} vs {nu.shape}")
    return float(np.sqrt(np.sum(nu * z * z)))


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    margin: float
    t_prime: int | None = None
    detail: str = ""

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass
class AssumptionReport:
    checks: list[AssumptionCheck] = field(default_factory=list)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _eventual(diff: np.ndarray, tol: float = 1e-9) -> tuple[bool, int | None, float]:
    """Earliest t' after which ``diff >= 0`` holds through the horizon."""
    bad = np.flatnonzero(diff < -tol)
    if bad.size and bad[-1] == diff.size - 1:
        return False, None, float(diff[-1])
    t_prime = int(bad[-1] + 1) if bad.size else 0
    return True, t_prime, float(diff[t_prime:].min())


def validate_assumptions(
    inputs: BoundInputs,
    schedule: ThresholdSchedule,
    policy: AttackPolicy,
    horizon: int = 10_000,
    eps: float | None = None,
) -> AssumptionReport:
    """Check the detection sufficient conditions on ``t = 0..horizon``.

    ``eps`` is the slack constant of the eventual conditions; it defaults to
    ``inputs.eps1``.
    """
    eps = inputs.eps1 if eps is None else eps
    report = AssumptionReport()

    need = 2.0 * math.sqrt(1.0 + inputs.eps1) / inputs.gap
    have = math.sqrt(1.0 + inputs.eps2)
    report.checks.append(
        AssumptionCheck(
            "eps_constraint",
            have >= need,
            have - need,
            None,
            f"sqrt(1+eps2)={have:.4f} vs 2 sqrt(1+eps1)/gap={need:.4f}; eps2 >= {need * need - 1.0:.4f} required",
        )
    )

    t = np.arange(horizon + 1, dtype=float)
    base = np.sqrt((1.0 + eps) * (t + 1.0) * np.log(t + 1.0))
    xi = np.asarray(schedule(t), dtype=float)
    ok, tp, margin = _eventual(xi - base)
    report.checks.append(AssumptionCheck("threshold_floor", ok, margin, tp, f"xi_t >= sqrt((1+{eps})(t+1)ln(t+1))"))

    cum_p = np.cumsum([policy.min_probability(k) for k in range(horizon + 1)])
    ok, tp, margin = _eventual(inputs.gap * cum_p - xi - base)
    report.checks.append(
        AssumptionCheck("cumulative_attack_floor", ok, margin, tp, "gap * sum p_m >= xi_t + sqrt((1+eps)(t+1)ln(t+1))")
    )

    floor = np.sqrt((1.0 + inputs.eps2) * (t + 1.0) * np.log(t + 1.0))
    ok, tp, margin = _eventual(cum_p - floor)
    report.checks.append(
        AssumptionCheck("attack_floor_eps2", ok, margin, tp, f"sum p_m >= sqrt((1+{inputs.eps2})(t+1)ln(t+1))")
    )
    return report
