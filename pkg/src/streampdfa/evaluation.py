"""Perplexity scoring against reference probabilities.

Candidate probabilities are floored at a small epsilon, normalized to sum to
one over the test set, and scored as

    perplexity = 2 ** (-sum_i target_i * log2(candidate_i))

The reported error is the absolute difference between candidate and target
perplexity, matching how competition-style solution files are scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .automaton import Pdfa, probability
from .dataio import Dataset, SolutionFile
from .errors import InputDataError, UsageError

PROBABILITY_FLOOR = 1e-30

CSV_HEADER = [
    "scenario", "mode", "heuristic", "params",
    "candidate_perplexity", "target_perplexity", "error",
    "wall_ms", "stored_states", "sketch_bytes",
]


@dataclass
class PerplexityReport:
    candidate_perplexity: float
    target_perplexity: float
    error: float
    scenario: str = ""
    mode: str = ""
    heuristic: str = ""
    params: str = ""


def _normalized(probs: Sequence[float], floor: float) -> list[float]:
    floored = [p if p > floor else floor for p in probs]
    total = math.fsum(floored)
    return [p / total for p in floored]


def perplexity(candidate: Sequence[float], target, floor: float = PROBABILITY_FLOOR) -> float:
    """Score a candidate probability vector against target weights."""
    weights = target.probabilities if isinstance(target, SolutionFile) else list(target)
    if len(candidate) != len(weights):
        raise InputDataError(
            f"candidate has {len(candidate)} probabilities, target has {len(weights)}"
        )
    if not candidate:
        raise InputDataError("empty probability vectors")
    if max(candidate) <= 0.0:
        raise InputDataError("candidate probabilities are all zero")
    dist = _normalized(candidate, floor)
    entropy = -math.fsum(w * math.log2(p) for w, p in zip(weights, dist))
    return 2.0 ** entropy


def evaluate_scenario(model: Pdfa, test: Dataset, solution: SolutionFile) -> PerplexityReport:
    """Candidate vs target perplexity of a frozen model on one test set."""
    if not model.frozen:
        raise UsageError("evaluation requires a frozen model")
    if len(test.sequences) != len(solution.probabilities):
        raise InputDataError(
            f"test set has {len(test.sequences)} sequences, "
            f"solution has {len(solution.probabilities)}"
        )
    candidate = [probability(model, seq) for seq in test.sequences]
    cand_pp = perplexity(candidate, solution)
    target_pp = perplexity(solution.probabilities, solution)
    return PerplexityReport(
        candidate_perplexity=cand_pp,
        target_perplexity=target_pp,
        error=abs(cand_pp - target_pp),
    )
