"""Command-line entry point: ``trustnet {run,bounds,verify}``.

Exit codes: 0 success, 2 configuration error, 3 invariant violation during
simulation, 4 bound-dominance failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import bounds as B
from .attack import cumulative_min_probability
from .consensus import build_nominal
from .errors import ConfigError, InvariantError, ModelViolation, TopologyError
from .harness import SERIES, compare_to_bounds, run_batch, run_once
from .config import ExperimentSpec, default_spec_path, load_spec

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_DOMINANCE = 0, 2, 3, 4


def _num(x) -> str:
    if isinstance(x, np.generic):
        x = x.item()
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


class _Csv:
    """CSV writer whose first line records the spec hash and seed."""

    def __init__(self, path: Path, spec: ExperimentSpec, header: Sequence[str]):
        self.fh = open(path, "w", newline="")
        self.fh.write(f"# spec_sha256={spec.sha256} seed={spec.seed}\n")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(header)

    def row(self, *values) -> None:
        self.w.writerow([_num(v) for v in values])

    def __enter__(self) -> "_Csv":
        return self

    def __exit__(self, *exc) -> None:
        self.fh.close()


def _selected(spec: ExperimentSpec, name: str | None) -> list[str]:
    if name is None:
        return list(spec.scenarios)
    spec.scenario(name)
    return [name]


def _out_dir(spec: ExperimentSpec, out: str | None) -> Path:
    path = Path(out if out is not None else spec.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args, spec: ExperimentSpec) -> int:
    names = _selected(spec, args.scenario)
    out = _out_dir(spec, args.out)
    with _Csv(out / "metrics.csv", spec, ["scenario", "t", "metric", "mean", "stderr"]) as metrics, _Csv(
        out / "runs.csv",
        spec,
        ["scenario", "run", "seed", "T_f", "tau", "z", "z_nu", "nominal_value",
         "horizon_deviation", "max_deviation", "decompose_error", "rate_ok"],
    ) as runs:  # fmt: skip
        for name in names:
            config = spec.scenarios[name]
            batch = run_batch(config)
            for metric in SERIES:
                mean, se = batch.mean(metric), batch.stderr(metric)
                for t in range(config.horizon + 1):
                    metrics.row(name, t, metric, float(mean[t]), float(se[t]))
            for r, m in enumerate(batch.runs):
                runs.row(name, r, config.seed + r, m.T_f, m.tau, m.z, m.z_nu, m.nominal_value,
                         m.horizon_deviation, float(m.deviation.max()), m.decompose_error, m.rate_ok)  # fmt: skip
            if args.svg:
                from .plotting import plot_consensus, plot_misclassification

                plot_misclassification(batch, out / f"{name}_misclassification.svg", name)
                plot_consensus(batch, out / f"{name}_consensus.svg", name)
            if args.traces:
                _write_traces(out, name, batch)
    return EXIT_OK


def _write_traces(out: Path, name: str, batch) -> None:
    from .attack import write_attack_trace
    from .consensus import write_trajectory
    from .detect import write_classification_trace
    from .trust import write_trust_trace

    trace, _ = run_once(batch.config, 0, batch.topology, batch.nominal)
    topo = batch.topology
    with open(out / f"{name}_trajectory.csv", "w", newline="") as fh:
        write_trajectory(fh, trace.x, topo.n_legit)
    with open(out / f"{name}_trust.csv", "w", newline="") as fh:
        write_trust_trace(fh, trace.index.pairs, trace.alpha, trace.beta)
    with open(out / f"{name}_classification.csv", "w", newline="") as fh:
        write_classification_trace(fh, trace.index, trace.trusted)
    with open(out / f"{name}_attacks.csv", "w", newline="") as fh:
        write_attack_trace(fh, list(topo.malicious), trace.p, trace.f)


def cmd_bounds(args, spec: ExperimentSpec) -> int:
    names = _selected(spec, args.scenario)
    out = _out_dir(spec, args.out)
    with _Csv(
        out / "bounds.csv", spec,
        ["scenario", "t", "legit_bound", "malicious_bound", "tf_tail", "delta_max", "rate_bound"],
    ) as table, _Csv(
        out / "assumptions.csv", spec, ["scenario", "condition", "status", "margin", "t_prime", "detail"]
    ) as checks:  # fmt: skip
        for name in names:
            config = spec.scenarios[name]
            inputs = config.bound_inputs()
            report = B.validate_assumptions(inputs, config.schedule, config.policy)
            for c in report.checks:
                checks.row(name, c.name, c.status, c.margin, c.t_prime, c.detail)
            if not spec.grid:
                continue
            topo = config.topology(0)
            nominal = build_nominal(topo, config.kappa)
            max_deg = max(topo.degree(i) for i in topo.legit)
            for t in spec.grid:
                xi = float(config.schedule(t))
                legit = B.clip_probability(B.legit_misclass_bound(max_deg, xi, t)).value
                mal = None
                if config.n_malicious:
                    cum_p = cumulative_min_probability(config.policy, t)
                    mal = B.malicious_misclass_bound(inputs.gap, cum_p, xi, t).value
                tf = B.clip_probability(B.tf_tail_bound(inputs, t)).value if t >= 1 else 1.0
                d_max = None
                if t >= 2:
                    d_max = B.deviation_bound(inputs, *B.g_functions(inputs, T0=t))
                rate = B.rate_bound(config.eta, config.T0, t, nominal.rho2).value if t >= config.T0 - 1 else None
                table.row(name, t, legit, mal, tf, d_max, rate)
    return EXIT_OK


def cmd_verify(args, spec: ExperimentSpec) -> int:
    names = _selected(spec, args.scenario)
    out = _out_dir(spec, args.out)
    failures = []
    with _Csv(
        out / "verify.csv", spec, ["scenario", "bound", "t", "empirical", "stderr", "analytical", "pass"]
    ) as table:
        for name in names:
            config = spec.scenarios[name]
            grid = [t for t in spec.grid if t <= config.horizon]
            if len(grid) != len(spec.grid):
                raise ConfigError(f"grid exceeds horizon {config.horizon} of scenario {name!r}")
            batch = run_batch(config)
            for row in compare_to_bounds(batch, grid, spec.bound_scale):
                table.row(name, row.bound, row.t, row.empirical, row.stderr, row.analytical, row.passed)
                if not row.passed:
                    failures.append((name, row.bound, row.t))
    if failures:
        print("bound dominance failed for:", file=sys.stderr)
        for name, bound, t in failures:
            print(f"  {name}: ({bound}, {t})", file=sys.stderr)
        return EXIT_DOMINANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, default=None, help="experiment spec (INI); bundled default if omitted")
    common.add_argument("--scenario", default=None, help="scenario section to use (default: all)")
    common.add_argument("--out", default=None, help="output directory (overrides the spec)")
    common.add_argument("--seed", type=int, default=None, help="base seed override")
    common.add_argument("--runs", type=int, default=None, help="runs per scenario override")

    parser = argparse.ArgumentParser(prog="trustnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="simulate batches and write metrics")
    run.add_argument("--svg", action="store_true", help="also render SVG panels")
    run.add_argument("--traces", action="store_true", help="dump run-0 traces per scenario")
    run.set_defaults(func=cmd_run)
    sub.add_parser("bounds", parents=[common], help="tabulate analytical bounds").set_defaults(func=cmd_bounds)
    sub.add_parser("verify", parents=[common], help="Monte Carlo bound-dominance suite").set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        if args.runs is not None and args.runs < 1:
            raise ConfigError("--runs must be at least 1")
        spec = load_spec(args.spec or default_spec_path()).override(args.seed, args.runs)
        return args.func(args, spec)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, ModelViolation, TopologyError) as exc:
        print(f"simulation invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
