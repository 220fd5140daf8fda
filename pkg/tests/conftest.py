from __future__ import annotations

import random

import pytest

from streampdfa.automaton import Pdfa, State, StateColor
from streampdfa.cms import CmsConfig, SketchSet
from streampdfa.dataio import Dataset
from streampdfa.merging import build_apta


def find_injective_seed(width: int, depth: int, alphabet_size: int, start: int = 1) -> int:
    """Seed whose per-row symbol-to-column maps are injective on the alphabet."""
    seed = start
    while True:
        cfg = CmsConfig(width=width, depth=depth, seed=seed)
        ok = all(
            len({cfg.columns(e)[r] for e in range(alphabet_size)}) == alphabet_size
            for r in range(depth)
        )
        if ok:
            return seed
        seed += 1


def random_dataset(rng: random.Random, alphabet_size: int = 4, n_sequences: int = 30,
                   max_len: int = 8) -> Dataset:
    seqs = []
    for _ in range(n_sequences):
        length = rng.randint(0, max_len)
        seqs.append([rng.randrange(alphabet_size) for _ in range(length)])
    if all(len(s) == 0 for s in seqs):
        seqs[0] = [0]  # keep at least one blue state around
    return Dataset(alphabet_size, seqs)


def random_apta(rng: random.Random, with_sketches: bool = True, alphabet_size: int = 4,
                n_sequences: int = 30, max_len: int = 8, n_futures: int = 2) -> Pdfa:
    data = random_dataset(rng, alphabet_size, n_sequences, max_len)
    cfg = CmsConfig(width=32, depth=3, seed=rng.randrange(1 << 30)) if with_sketches else None
    return build_apta(data, with_sketches=with_sketches, n_futures=n_futures if with_sketches else 0,
                      cms_config=cfg)


def exact_count_state(
    state_id: int,
    color: StateColor,
    counts: dict[int, int],
    termination: int,
    cms_config: CmsConfig | None = None,
    n_futures: int = 1,
) -> State:
    """State whose outgoing counts, termination, size, and (optionally)
    first-future sketch all agree exactly. Edge targets are throwaway
    states, good enough for depth-0 comparisons."""
    sketches = SketchSet(cms_config, n_futures) if cms_config is not None else None
    s = State(state_id, color, sketches=sketches)
    s.size = termination + sum(counts.values())
    s.termination_count = termination
    from streampdfa.automaton import Edge

    for a, c in counts.items():
        dummy = State(10_000 + state_id * 100 + a, StateColor.WHITE)
        s.outgoing[a] = Edge(dummy, c)
    if sketches is not None:
        first = sketches.per_future[0]
        for a, c in counts.items():
            for _ in range(c):
                first.store(a)
        for _ in range(termination):
            first.store_termination()
        # deeper futures, if any, just see terminations so totals line up
        for sk in sketches.per_future[1:]:
            for _ in range(s.size):
                sk.store_termination()
    return s


@pytest.fixture
def rng():
    return random.Random(20260817)
