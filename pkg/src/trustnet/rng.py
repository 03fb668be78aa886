"""Named, independent random streams derived from a single seed.

Every run owns four streams (topology, initial values, trust, attacks).  Each
is keyed by ``SeedSequence(seed, spawn_key=(stream,))`` so that swapping the
attack policy leaves trust draws untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOPOLOGY = 0
INITIAL = 1
TRUST = 2
ATTACK = 3


def stream(seed: int, name: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(name,)))


@dataclass(frozen=True)
class RunStreams:
    initial: np.random.Generator
    trust: np.random.Generator
    attack: np.random.Generator


def run_streams(seed: int) -> RunStreams:
    return RunStreams(
        initial=stream(seed, INITIAL),
        trust=stream(seed, TRUST),
        attack=stream(seed, ATTACK),
    )
