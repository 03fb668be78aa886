import pytest

from trustnet.attack import LogisticSchedule, Persistent, SoftmaxDecay, Stationary
from trustnet.config import default_spec_path, load_spec, parse_grid, parse_spec
from trustnet.detect import PowerLaw, SqrtLog
from trustnet.errors import ConfigError
from trustnet.trust import Bernoulli


def test_default_spec_scenarios():
    spec = load_spec(default_spec_path())
    assert list(spec.scenarios) == ["softmax_decay", "logistic_schedule", "stationary", "persistent"]
    assert spec.grid == (25, 50, 100, 200)
    cfg = spec.scenario("stationary")
    assert cfg.policy == Stationary(0.5)
    assert isinstance(spec.scenario("persistent").policy, Persistent)
    assert spec.scenario("softmax_decay").policy == SoftmaxDecay(0.8, 5.0)
    assert spec.scenario("logistic_schedule").policy == LogisticSchedule(0.3, 0.005)
    assert cfg.schedule == SqrtLog(0.005)
    assert (cfg.n_legit, cfg.n_malicious, cfg.extra_legit_pairs, cfg.malicious_link_prob) == (20, 30, 20, 0.2)
    assert (cfg.eta, cfg.T0, cfg.kappa, cfg.horizon, cfg.n_runs) == (4.0, 25, 10.0, 200, 100)
    assert cfg.trust.gap == pytest.approx(0.4)


def test_unknown_scenario_lists_available():
    spec = load_spec(default_spec_path())
    with pytest.raises(ConfigError, match="softmax_decay, logistic_schedule"):
        spec.scenario("missing")


def test_overrides():
    spec = load_spec(default_spec_path()).override(seed=9, runs=3)
    assert spec.seed == 9
    assert all(c.seed == 9 and c.n_runs == 3 for c in spec.scenarios.values())


def test_other_variants_and_laws():
    spec = parse_spec(
        """
        [a]
        threshold.variant = power_law
        threshold.xi = 2
        threshold.gamma = 0.6
        trust.legit_law = bernoulli
        trust.legit_mean = 0.9
        topology.resample = yes
        run.seed = 4
        """
    )
    cfg = spec.scenario("a")
    assert cfg.schedule == PowerLaw(2.0, 0.6)
    assert cfg.trust.legit == Bernoulli(0.9)
    assert cfg.resample_topology and cfg.seed == 4


@pytest.mark.parametrize(
    "text",
    [
        "[a]\nconsensus.eta = -1\n",
        "[a]\ntopology.n_legit = many\n",
        "[a]\nattack.variant = sneaky\n",
        "[a]\nthreshold.variant = linear_gap\n",
        "[a]\nunknown.key = 1\n",
        "[experiment]\ngrid = 1, x\n[a]\n",
        "[experiment]\nseed = -3\n[a]\n",
        "[experiment]\nbogus = 1\n[a]\n",
        "[experiment]\nseed = 1\n",
        "[a]\nbounds.delta = 1.5\n",
        "[a]\nrun.n_runs = 0\n",
        "not an ini file",
    ],
)
def test_invalid_specs(text):
    with pytest.raises(ConfigError):
        parse_spec(text)


def test_grid_parsing():
    assert parse_grid("") == ()
    assert parse_grid("1, 2 3") == (1, 2, 3)
    with pytest.raises(ConfigError):
        parse_grid("-1")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_spec(tmp_path / "nope.ini")


def test_hash_tracks_content():
    assert parse_spec("[a]\n").sha256 != parse_spec("[b]\n").sha256
