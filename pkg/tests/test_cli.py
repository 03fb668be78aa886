import textwrap

import pytest

from trustnet.cli import main
from trustnet.config import default_spec_path

SMALL = textwrap.dedent(
    """
    [experiment]
    seed = 3
    grid = 25, 50
    {extra}

    [DEFAULT]
    run.n_runs = 4
    run.horizon = 60

    [persistent]
    attack.variant = persistent
    {scenario}

    [stationary]
    attack.variant = stationary
    attack.p = 0.5
    """
)


def write_spec(tmp_path, extra="", scenario="", name="spec.ini"):
    path = tmp_path / name
    path.write_text(SMALL.format(extra=extra, scenario=scenario))
    return str(path)


def run_cli(*args):
    return main([str(a) for a in args])


def test_run_writes_outputs(tmp_path):
    spec = write_spec(tmp_path)
    out = tmp_path / "out"
    assert run_cli("run", "--spec", spec, "--out", out, "--svg", "--traces") == 0
    for name in ("metrics.csv", "runs.csv", "persistent_misclassification.svg", "stationary_consensus.svg",
                 "persistent_trajectory.csv", "persistent_trust.csv", "persistent_classification.csv",
                 "persistent_attacks.csv"):  # fmt: skip
        assert (out / name).exists(), name
    lines = (out / "metrics.csv").read_text().splitlines()
    assert lines[0].startswith("# spec_sha256=") and lines[0].endswith("seed=3")
    assert lines[1] == "scenario,t,metric,mean,stderr"
    runs = (out / "runs.csv").read_text().splitlines()
    assert len(runs) == 2 + 8


def test_default_spec_runs(tmp_path):
    assert run_cli("run", "--spec", default_spec_path(), "--scenario", "persistent", "--runs", 2, "--out", tmp_path) == 0


def test_missing_scenario_exit_2(tmp_path, capsys):
    assert run_cli("run", "--spec", write_spec(tmp_path), "--scenario", "nope", "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "persistent" in err and "stationary" in err


def test_nonpositive_eta_exit_2(tmp_path):
    spec = write_spec(tmp_path, scenario="consensus.eta = 0")
    assert run_cli("run", "--spec", spec, "--out", tmp_path) == 2


def test_bounds_table_and_validator(tmp_path):
    out = tmp_path / "b"
    assert run_cli("bounds", "--spec", default_spec_path(), "--out", out) == 0
    table = (out / "bounds.csv").read_text().splitlines()
    assert table[1] == "scenario,t,legit_bound,malicious_bound,tf_tail,delta_max,rate_bound"
    assert len(table) == 2 + 4 * 4
    checks = (out / "assumptions.csv").read_text()
    assert "softmax_decay,eps_constraint,FAIL" in checks


def test_empty_grid_header_only(tmp_path):
    spec = tmp_path / "s.ini"
    spec.write_text("[experiment]\ngrid =\n[a]\n")
    assert run_cli("bounds", "--spec", spec, "--out", tmp_path) == 0
    assert len((tmp_path / "bounds.csv").read_text().splitlines()) == 2


@pytest.mark.parametrize("extra,scenario", [("", "bounds.delta = 1.2"), ("grid = 5, ten", "")])
def test_bounds_invalid_exit_2(tmp_path, extra, scenario):
    assert run_cli("bounds", "--spec", write_spec(tmp_path, extra, scenario), "--out", tmp_path) == 2


def test_verify_default_persistent_passes(tmp_path):
    assert run_cli("verify", "--spec", default_spec_path(), "--scenario", "persistent", "--out", tmp_path) == 0
    rows = (tmp_path / "verify.csv").read_text().splitlines()[2:]
    assert rows and all(r.endswith(",1") for r in rows)


def test_verify_halved_bound_exit_4(tmp_path, capsys):
    spec = write_spec(tmp_path, extra="verify.bound_scale = 0.5")
    assert run_cli("verify", "--spec", spec, "--scenario", "persistent", "--out", tmp_path) == 4
    assert "(tf_tail, 25)" in capsys.readouterr().err


def test_verify_zero_runs_exit_2(tmp_path):
    spec = write_spec(tmp_path, scenario="run.n_runs = 0")
    assert run_cli("verify", "--spec", spec, "--out", tmp_path) == 2
    assert run_cli("verify", "--spec", write_spec(tmp_path), "--runs", 0, "--out", tmp_path) == 2


def test_verify_grid_beyond_horizon_exit_2(tmp_path):
    spec = write_spec(tmp_path, extra="grid = 25, 500")
    assert run_cli("verify", "--spec", spec, "--out", tmp_path) == 2


@pytest.mark.parametrize("command", ["run", "bounds", "verify"])
def test_byte_identical_outputs(tmp_path, command):
    spec = write_spec(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    extra = ["--svg"] if command == "run" else []
    assert run_cli(command, "--spec", spec, "--out", a, *extra) in (0, 4)
    assert run_cli(command, "--spec", spec, "--out", b, *extra) in (0, 4)
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_seed_override_changes_header_and_data(tmp_path):
    spec = write_spec(tmp_path)
    run_cli("run", "--spec", spec, "--out", tmp_path / "a")
    run_cli("run", "--spec", spec, "--out", tmp_path / "b", "--seed", 11)
    a = (tmp_path / "a" / "metrics.csv").read_text().splitlines()
    b = (tmp_path / "b" / "metrics.csv").read_text().splitlines()
    assert b[0].endswith("seed=11")
    assert a[2:] != b[2:]
