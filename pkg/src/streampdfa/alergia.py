"""Alergia-style compatibility over exact counts, with k-tails lookahead.

The same Hoeffding bound as the sketch test, applied to the exact
(termination, per-symbol) frequency vectors of two states with n taken from
the state pass sizes. k > 0 requires the test to also hold for same-symbol
child pairs down to depth k; a missing child on either side is zero evidence
and passes vacuously.

The score favors merges backed by the most evidence: the sum of
min(size1, size2) over every compared pair.
"""

from __future__ import annotations

import math

from .automaton import State
from .errors import UsageError


def alergia_check(s1: State, s2: State, alpha: float = 0.05, k: int = 1) -> bool:
    n1 = s1.size
    n2 = s2.size
    if n1 > 0 and n2 > 0:
        bound = math.sqrt(0.5 * math.log(2.0 / alpha)) * (
            1.0 / math.sqrt(n1) + 1.0 / math.sqrt(n2)
        )
        inv1 = 1.0 / n1
        inv2 = 1.0 / n2
        if abs(s1.termination_count * inv1 - s2.termination_count * inv2) >= bound:
            return False
        for a in s1.outgoing.keys() | s2.outgoing.keys():
            e1 = s1.outgoing.get(a)
            e2 = s2.outgoing.get(a)
            c1 = e1.count if e1 is not None else 0
            c2 = e2.count if e2 is not None else 0
            if abs(c1 * inv1 - c2 * inv2) >= bound:
                return False
    if k > 0:
        for a in s1.outgoing.keys() & s2.outgoing.keys():
            if not alergia_check(s1.outgoing[a].target, s2.outgoing[a].target, alpha, k - 1):
                return False
    return True


def alergia_score(s1: State, s2: State, k: int = 1) -> float:
    """Overlap evidence: min sizes summed over all compared pairs."""
    score = float(min(s1.size, s2.size))
    if k > 0:
        for a in s1.outgoing.keys() & s2.outgoing.keys():
            score += alergia_score(s1.outgoing[a].target, s2.outgoing[a].target, k - 1)
    return score


def _collect_pairs(s1: State, s2: State, k: int, out: list) -> None:
    out.append(s1)
    out.append(s2)
    if k > 0:
        for a in s1.outgoing.keys() & s2.outgoing.keys():
            _collect_pairs(s1.outgoing[a].target, s2.outgoing[a].target, k - 1, out)


class AlergiaHeuristic:
    """Merge-engine adapter for the exact-count test. k >= 2 keeps whole
    grandchild layers comparable and is only meaningful in batch mode where
    the tree below the fringe is stored."""

    name = "alergia"
    needs_sketches = False

    def __init__(self, alpha: float = 0.05, k: int = 1):
        if not 0.0 < alpha < 1.0:
            raise UsageError(f"alpha must be in (0, 1), got {alpha}")
        if k < 0:
            raise UsageError(f"k must be >= 0, got {k}")
        self.alpha = alpha
        self.k = k

    def consistency_check(self, red: State, blue: State) -> bool:
        return alergia_check(red, blue, self.alpha, self.k)

    def assign_score(self, red: State, blue: State) -> float:
        return alergia_score(red, blue, self.k)

    def witnesses(self, red: State, blue: State):
        out: list[State] = []
        _collect_pairs(red, blue, self.k, out)
        return out

    def __repr__(self) -> str:
        return f"AlergiaHeuristic(alpha={self.alpha}, k={self.k})"
