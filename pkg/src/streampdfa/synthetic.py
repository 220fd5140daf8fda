"""Synthetic scenario generation: random PDFA targets, sampled datasets,
exact solution probabilities. Used by the test suite, and `write_scenario_dir`
lays generated scenarios out on disk in the layout `bench` discovers, for
when no real scenario directory is at hand."""

from __future__ import annotations

import random
from pathlib import Path

from .automaton import Edge, Pdfa, StateColor, freeze, probability
from .dataio import Dataset, SolutionFile, write_abbadingo
from .errors import UsageError

_SCALE = 1_000_000  # weight resolution of generated targets


def random_target(
    n_states: int,
    alphabet_size: int,
    rng: random.Random,
    min_out: int = 2,
    max_out: int = 4,
    term_low: float = 0.08,
    term_high: float = 0.35,
) -> Pdfa:
    """Random frozen PDFA. Every state can terminate (probability at least
    term_low), so sampled sequences stay finite."""
    if n_states < 1:
        raise UsageError("need at least one state")
    if alphabet_size < 2:
        raise UsageError("need at least two symbols")
    model = Pdfa(alphabet_size)
    states = [model.root_state()]
    for _ in range(n_states - 1):
        states.append(model.new_state(StateColor.WHITE))
    for s in states:
        term = rng.uniform(term_low, term_high)
        n_out = rng.randint(min_out, min(max_out, alphabet_size))
        symbols = rng.sample(range(alphabet_size), n_out)
        weights = [rng.uniform(0.2, 1.0) for _ in symbols]
        wsum = sum(weights) / (1.0 - term)
        s.termination_count = max(1, round(term * _SCALE))
        for a, w in zip(symbols, weights):
            target = states[rng.randrange(n_states)]
            count = max(1, round(w / wsum * _SCALE))
            s.outgoing[a] = Edge(target, count)
    return freeze(model)


def sample_sequence(target: Pdfa, rng: random.Random, max_len: int = 400) -> list[int]:
    """One sequence drawn from the target distribution. Walks longer than
    max_len are redrawn; with per-state termination mass that is astronomically
    rare and redrawing keeps the sample exact."""
    while True:
        seq: list[int] = []
        q = target.root_state()
        while len(seq) <= max_len:
            r = rng.randrange(q.size)
            if r < q.termination_count:
                return seq
            r -= q.termination_count
            for a in sorted(q.outgoing):
                e = q.outgoing[a]
                if r < e.count:
                    seq.append(a)
                    q = e.target
                    break
                r -= e.count
            else:
                return seq  # rounding left a mass gap; treat as termination
        # redraw


def make_scenario(
    seed: int,
    n_states: int = 20,
    alphabet_size: int = 8,
    train_size: int = 8000,
    test_size: int = 800,
) -> tuple[Dataset, Dataset, SolutionFile]:
    """Train set, test set, and exact target probabilities for the test set,
    normalized to sum to one the way competition solution files are."""
    rng = random.Random(seed)
    target = random_target(n_states, alphabet_size, rng)
    train = Dataset(alphabet_size, [sample_sequence(target, rng) for _ in range(train_size)])
    test = Dataset(alphabet_size, [sample_sequence(target, rng) for _ in range(test_size)])
    raw = [probability(target, seq) for seq in test.sequences]
    total = sum(raw)
    solution = SolutionFile([p / total for p in raw])
    return train, test, solution


def write_scenario_dir(
    root,
    name: str,
    train: Dataset,
    test: Dataset,
    solution: SolutionFile,
) -> Path:
    """Write one scenario under `root` as `{name}.train.dat`, `{name}.test.dat`
    and `{name}_solution.txt`, the layout scenario discovery expects."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_abbadingo(train, root / f"{name}.train.dat")
    write_abbadingo(test, root / f"{name}.test.dat")
    lines = [str(len(solution.probabilities))]
    lines += [repr(p) for p in solution.probabilities]
    (root / f"{name}_solution.txt").write_text("\n".join(lines) + "\n")
    return root
