import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trustnet.detect import (
    LinearGap,
    PairIndex,
    PowerLaw,
    SqrtLog,
    classify_all,
    threshold,
    trusted_neighborhood,
)
from trustnet.errors import ConfigError, TopologyError
from trustnet.topology import from_edges
from trustnet.trust import TrustLedger

# mpmath, 30 digits: sqrt(1.005 * 200 * ln 200)
SQRTLOG_T199 = 32.6337523229578270354315706289


def test_threshold_values():
    assert threshold(SqrtLog(0.3), 0) == 0.0
    assert threshold(PowerLaw(1.0, 0.75), 15) == pytest.approx(8.0, rel=1e-15)
    assert threshold(SqrtLog(0.005), 199) == pytest.approx(SQRTLOG_T199, rel=1e-14)
    oracle = mpmath.sqrt(mpmath.mpf("1.005") * 200 * mpmath.log(200))
    assert threshold(SqrtLog(0.005), 199) == pytest.approx(float(oracle), rel=1e-14)
    assert threshold(LinearGap(0.2), 9) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        threshold(SqrtLog(), -1)


@pytest.mark.parametrize("bad", [lambda: SqrtLog(0), lambda: PowerLaw(1, 0.5), lambda: PowerLaw(0, 0.7), lambda: LinearGap(0)])
def test_invalid_schedules(bad):
    with pytest.raises(ConfigError):
        bad()


def star(n_leaves):
    return from_edges(1 + n_leaves, 0, [(0, j) for j in range(1, n_leaves + 1)] + [(1, 2)] * (n_leaves > 1))


def ledger_with(topo, values):
    ledger = TrustLedger.for_topology(topo)
    ledger.beta[:] = [values.get(p, 0.0) for p in ledger.pairs]
    return ledger


def test_single_neighbor_always_trusted():
    topo = from_edges(2, 0, [(0, 1)])
    ledger = ledger_with(topo, {(0, 1): 3.0, (1, 0): 0.0})
    nb = trusted_neighborhood(ledger, topo, 0, 0.0)
    assert nb.trusted == {1} and nb.most_trusted == 1


def test_worked_example_from_algorithm():
    topo = star(3)
    ledger = ledger_with(topo, {(0, 1): 10.0, (0, 2): 7.5, (0, 3): 2.0})
    nb = trusted_neighborhood(ledger, topo, 0, 3.0)
    assert nb.most_trusted == 1
    assert nb.trusted == {1, 2}


def test_equal_trust_means_everyone_trusted_and_smallest_index_wins():
    topo = star(3)
    ledger = ledger_with(topo, {(0, 1): 4.0, (0, 2): 4.0, (0, 3): 4.0})
    nb = trusted_neighborhood(ledger, topo, 0, 0.0)
    assert nb.trusted == {1, 2, 3} and nb.most_trusted == 1


def test_zero_threshold_keeps_only_ties():
    topo = star(3)
    ledger = ledger_with(topo, {(0, 1): 1.0, (0, 2): 2.0, (0, 3): 2.0})
    assert trusted_neighborhood(ledger, topo, 0, threshold(SqrtLog(), 0)).trusted == {2, 3}


def test_rejects_malicious_observer_and_isolated_agent():
    topo = from_edges(2, 1, [(0, 1), (0, 2)])
    ledger = TrustLedger.for_topology(topo)
    with pytest.raises(TopologyError):
        trusted_neighborhood(ledger, topo, 2, 1.0)
    lonely = from_edges(3, 0, [(0, 1)])
    with pytest.raises(TopologyError):
        trusted_neighborhood(TrustLedger.for_topology(lonely), lonely, 2, 1.0)


def test_two_agents_trust_each_other():
    topo = from_edges(2, 0, [(0, 1)])
    ledger = TrustLedger.for_topology(topo)
    rng = np.random.default_rng(0)
    for t in range(20):
        ledger.accumulate_array(rng.random(2), t)
        assert classify_all(ledger, topo, SqrtLog(), t) == {0: {1}, 1: {0}}


def test_per_agent_schedules(paper_topology, rng):
    ledger = TrustLedger.for_topology(paper_topology)
    ledger.accumulate_array(rng.random(len(ledger.pairs)) * 5, 0)
    strict = {i: LinearGap(1e-9) for i in paper_topology.legit}
    loose = {i: LinearGap(10.0) for i in paper_topology.legit}
    tight, wide = classify_all(ledger, paper_topology, strict, 0), classify_all(ledger, paper_topology, loose, 0)
    assert all(len(tight[i]) == 1 for i in tight)
    assert all(wide[i] == paper_topology.neighbors(i) for i in wide)


def test_replay_is_deterministic(paper_topology, rng):
    ledger = TrustLedger.for_topology(paper_topology)
    ledger.accumulate_array(rng.random(len(ledger.pairs)) * 10, 0)
    copy = TrustLedger.for_topology(paper_topology)
    copy.accumulate_array(ledger.beta.copy(), 0)
    assert classify_all(ledger, paper_topology, SqrtLog(), 40) == classify_all(copy, paper_topology, SqrtLog(), 40)


def test_vectorized_mask_matches_reference(paper_topology, rng):
    index = PairIndex(paper_topology)
    ledger = TrustLedger.for_topology(paper_topology)
    assert ledger.pairs == index.pairs
    for xi in (0.0, 0.5, 2.0, 10.0):
        ledger.beta[:] = rng.random(len(index)) * 5
        ref = classify_all(ledger, paper_topology, LinearGap(xi) if xi else SqrtLog(), 0 if not xi else 0)
        mask = index.trusted_mask(ledger.beta, xi)
        got = {i: frozenset(index.nbr[(index.obs == i) & mask].tolist()) for i in paper_topology.legit}
        assert got == ref


beta_lists = st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=8)


@given(beta_lists, st.floats(0, 50), st.floats(0, 50))
def test_monotone_in_threshold(betas, a, b):
    lo, hi = sorted((a, b))
    topo = star(len(betas))
    ledger = ledger_with(topo, {(0, j + 1): v for j, v in enumerate(betas)})
    small = trusted_neighborhood(ledger, topo, 0, lo)
    large = trusted_neighborhood(ledger, topo, 0, hi)
    assert small.trusted <= large.trusted
    assert small.most_trusted in small.trusted


@given(beta_lists, st.floats(0, 20), st.floats(-50, 50))
def test_shift_invariance(betas, xi, c):
    topo = star(len(betas))
    base = ledger_with(topo, {(0, j + 1): v for j, v in enumerate(betas)})
    shifted = ledger_with(topo, {(0, j + 1): v + c for j, v in enumerate(betas)})
    a = trusted_neighborhood(base, topo, 0, xi).trusted
    b = trusted_neighborhood(shifted, topo, 0, xi).trusted
    # floating-point shifts can move gaps sitting exactly on the threshold
    gaps = max(betas) - np.array(betas)
    if np.all(np.abs(gaps - xi) > 1e-9):
        assert a == b
