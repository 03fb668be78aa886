"""INI experiment specs with dotted scenario keys.

Layout::

    [experiment]
    seed = 0
    out = results
    grid = 25, 50, 100, 200

    [DEFAULT]
    consensus.eta = 4        ; shared by every scenario

    [persistent]
    attack.variant = persistent

Every section other than ``experiment`` is a scenario.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable

from .attack import LogisticSchedule, Persistent, SoftmaxDecay, Stationary
from .detect import LinearGap, PowerLaw, SqrtLog
from .errors import ConfigError
from .harness import SimConfig
from .trust import Bernoulli, TrustModel, Uniform

EXPERIMENT = "experiment"

SCENARIO_KEYS = {
    "topology.n_legit", "topology.n_malicious", "topology.extra_legit_pairs",
    "topology.malicious_link_prob", "topology.resample",
    "trust.legit_law", "trust.legit_low", "trust.legit_high", "trust.legit_mean",
    "trust.malicious_law", "trust.malicious_low", "trust.malicious_high", "trust.malicious_mean",
    "attack.variant", "attack.p", "attack.r1", "attack.eps2", "attack.p_bar", "attack.r2",
    "threshold.variant", "threshold.eps1", "threshold.xi", "threshold.gamma", "threshold.slope",
    "consensus.kappa", "consensus.eta", "consensus.t0",
    "run.horizon", "run.n_runs", "run.seed",
    "bounds.delta", "bounds.eps2",
}  # fmt: skip
EXPERIMENT_KEYS = {"seed", "out", "grid", "verify.bound_scale"}


def default_spec_path() -> Path:
    return Path(str(resources.files("trustnet") / "configs" / "paper_default.ini"))


@dataclass(frozen=True)
class ExperimentSpec:
    scenarios: dict[str, SimConfig]
    out: str
    grid: tuple[int, ...]
    seed: int
    bound_scale: float
    sha256: str

    def scenario(self, name: str) -> SimConfig:
        if name not in self.scenarios:
            raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(self.scenarios)}")
        return self.scenarios[name]

    def override(self, seed: int | None = None, runs: int | None = None) -> "ExperimentSpec":
        scenarios = self.scenarios
        if seed is not None:
            scenarios = {k: replace(v, seed=seed) for k, v in scenarios.items()}
        if runs is not None:
            scenarios = {k: replace(v, n_runs=runs) for k, v in scenarios.items()}
        return replace(self, scenarios=scenarios, seed=self.seed if seed is None else seed)


class _Section:
    """Typed access to one section; conversion errors name the offending key."""

    def __init__(self, name: str, items: dict[str, str]):
        self.name, self.items = name, items

    def get(self, key: str, conv: Callable, default=None):
        if key not in self.items:
            return default
        raw = self.items[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[{self.name}] {key} = {raw!r}: {exc}") from None


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _int(s: str) -> int:
    return int(s, 10)


def parse_grid(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.replace(",", " ").split()]
    try:
        grid = tuple(int(p, 10) for p in parts if p)
    except ValueError:
        raise ConfigError(f"grid {text!r} must list integers") from None
    if any(t < 0 for t in grid):
        raise ConfigError("grid times must be nonnegative")
    return grid


def _law(sec: _Section, prefix: str, low: float, high: float):
    kind = sec.get(f"trust.{prefix}_law", str, "uniform").lower()
    if kind == "uniform":
        return Uniform(sec.get(f"trust.{prefix}_low", float, low), sec.get(f"trust.{prefix}_high", float, high))
    if kind == "bernoulli":
        return Bernoulli(sec.get(f"trust.{prefix}_mean", float, 0.5 * (low + high)))
    raise ConfigError(f"[{sec.name}] unknown trust law {kind!r}")


def _policy(sec: _Section):
    kind = sec.get("attack.variant", str, "softmax_decay").lower()
    if kind == "persistent":
        return Persistent()
    if kind == "stationary":
        return Stationary(sec.get("attack.p", float, 0.5))
    if kind == "softmax_decay":
        return SoftmaxDecay(sec.get("attack.r1", float, 0.8), sec.get("attack.eps2", float, 5.0))
    if kind == "logistic_schedule":
        return LogisticSchedule(sec.get("attack.p_bar", float, 0.3), sec.get("attack.r2", float, 0.005))
    raise ConfigError(f"[{sec.name}] unknown attack variant {kind!r}")


def _schedule(sec: _Section):
    kind = sec.get("threshold.variant", str, "sqrt_log").lower()
    if kind == "sqrt_log":
        return SqrtLog(sec.get("threshold.eps1", float, 0.005))
    if kind == "power_law":
        return PowerLaw(sec.get("threshold.xi", float, 1.0), sec.get("threshold.gamma", float, 0.75))
    if kind == "linear_gap":
        slope = sec.get("threshold.slope", float)
        if slope is None:
            raise ConfigError(f"[{sec.name}] linear_gap threshold needs threshold.slope")
        return LinearGap(slope)
    raise ConfigError(f"[{sec.name}] unknown threshold variant {kind!r}")


def _scenario(name: str, items: dict[str, str], seed: int) -> SimConfig:
    unknown = set(items) - SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
    sec = _Section(name, items)
    try:
        return SimConfig(
            n_legit=sec.get("topology.n_legit", _int, 20),
            n_malicious=sec.get("topology.n_malicious", _int, 30),
            extra_legit_pairs=sec.get("topology.extra_legit_pairs", _int, 20),
            malicious_link_prob=sec.get("topology.malicious_link_prob", float, 0.2),
            resample_topology=sec.get("topology.resample", _bool, False),
            trust=TrustModel(_law(sec, "legit", 0.4, 1.0), _law(sec, "malicious", 0.0, 0.6)),
            policy=_policy(sec),
            schedule=_schedule(sec),
            kappa=sec.get("consensus.kappa", float, 10.0),
            eta=sec.get("consensus.eta", float, 4.0),
            T0=sec.get("consensus.t0", _int, 25),
            horizon=sec.get("run.horizon", _int, 200),
            n_runs=sec.get("run.n_runs", _int, 100),
            seed=sec.get("run.seed", _int, seed),
            delta=sec.get("bounds.delta", float, 0.1),
            eps2=sec.get("bounds.eps2", float, None),
        )
    except ConfigError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def parse_spec(text: str) -> ExperimentSpec:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed spec: {exc}") from None

    exp = dict(cp[EXPERIMENT]) if cp.has_section(EXPERIMENT) else dict(cp.defaults())
    defaults = cp.defaults()
    exp = {k: v for k, v in exp.items() if k not in defaults or k in EXPERIMENT_KEYS}
    unknown = set(exp) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"[{EXPERIMENT}] unknown keys: {', '.join(sorted(unknown))}")
    esec = _Section(EXPERIMENT, exp)
    seed = esec.get("seed", _int, 0)
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    grid = parse_grid(exp.get("grid", "25, 50, 100, 200"))
    bound_scale = esec.get("verify.bound_scale", float, 1.0)
    if not bound_scale > 0:
        raise ConfigError("verify.bound_scale must be positive")

    scenarios = {}
    for name in cp.sections():
        if name == EXPERIMENT:
            continue
        scenarios[name] = _scenario(name, dict(cp[name]), seed)
    if not scenarios:
        raise ConfigError("spec defines no scenarios")
    return ExperimentSpec(
        scenarios=scenarios,
        out=esec.get("out", str, "results"),
        grid=grid,
        seed=seed,
        bound_scale=bound_scale,
        sha256=hashlib.sha256(text.encode()).hexdigest(),
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from None
    return parse_spec(text)
