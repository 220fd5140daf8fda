"""Sketch-space consistency test and merge score.

Consistency: a Hoeffding bound per sketch row. Two count rows with totals
n1, n2 are compatible at significance alpha when every column satisfies

    |x_i/n1 - y_i/n2| < sqrt(ln(2/alpha) / 2) * (1/sqrt(n1) + 1/sqrt(n2))

with a vacuous pass when either total is zero (no evidence, no objection).
The termination column takes part like any other column.

Score: mean per-row cosine similarity, summed over the n_futures sketches,
so larger means more lookahead agreement and the range is [0, n_futures].
Rows that are both zero count as 1, rows where exactly one side is zero
count as 0.
"""

from __future__ import annotations

import math

import numpy as np

from .automaton import State
from .errors import UsageError


def hoeffding_bound(alpha: float, n1: int, n2: int) -> float:
    """Right-hand side of the row test for totals n1, n2."""
    return math.sqrt(0.5 * math.log(2.0 / alpha)) * (
        1.0 / math.sqrt(n1) + 1.0 / math.sqrt(n2)
    )


def hoeffding_row_check(row1, row2, alpha: float = 0.05) -> bool:
    """Do two count rows agree within the Hoeffding bound?"""
    r1 = np.asarray(row1, dtype=np.float64)
    r2 = np.asarray(row2, dtype=np.float64)
    if r1.shape != r2.shape:
        raise UsageError(f"row shapes differ: {r1.shape} vs {r2.shape}")
    n1 = float(r1.sum())
    n2 = float(r2.sum())
    if n1 == 0 or n2 == 0:
        return True
    bound = hoeffding_bound(alpha, n1, n2)
    return float(np.abs(r1 / n1 - r2 / n2).max()) < bound


def _require_sketches(red: State, blue: State):
    sr, sb = red.sketches, blue.sketches
    if sr is None or sb is None:
        raise UsageError("sketch heuristic needs sketches on both states")
    if sr.config != sb.config or sr.n_futures != sb.n_futures:
        raise UsageError("sketch heuristic: states carry incompatible sketch sets")
    return sr, sb


def consistency_check(red: State, blue: State, alpha: float = 0.05) -> bool:
    """Hoeffding row test over every row of every per-future sketch pair.

    Row totals within one sketch all equal the sketch total (each recorded
    pass stores exactly once per row), so the per-sketch total stands in for
    each row's n and the whole sketch is tested in one vectorized pass with
    arithmetic identical to hoeffding_row_check."""
    sr, sb = _require_sketches(red, blue)
    scale = math.sqrt(0.5 * math.log(2.0 / alpha))
    for m in range(sr.n_futures):
        n1 = sr.per_future[m].total
        n2 = sb.per_future[m].total
        if n1 == 0 or n2 == 0:
            continue
        bound = scale * (1.0 / math.sqrt(n1) + 1.0 / math.sqrt(n2))
        diff = np.abs(sr.tensor[m] / float(n1) - sb.tensor[m] / float(n2)).max()
        if not float(diff) < bound:
            return False
    return True


def assign_score(red: State, blue: State) -> float:
    """Summed mean per-row cosine similarity between the two sketch sets."""
    sr, sb = _require_sketches(red, blue)
    x = sr.tensor.astype(np.float64)
    y = sb.tensor.astype(np.float64)
    dots = np.einsum("mrc,mrc->mr", x, y)
    nx = np.sqrt(np.einsum("mrc,mrc->mr", x, x))
    ny = np.sqrt(np.einsum("mrc,mrc->mr", y, y))
    sims = np.zeros_like(dots)
    both_zero = (nx == 0.0) & (ny == 0.0)
    live = (nx > 0.0) & (ny > 0.0)
    sims[both_zero] = 1.0
    sims[live] = dots[live] / (nx[live] * ny[live])
    # exactly one side zero stays 0
    return float(sims.sum() / sr.config.depth)


class SketchHeuristic:
    """Merge-engine adapter: alpha-parameterized consistency plus the cosine
    score. Reads only the two states' own sketch sets."""

    name = "sketch"
    needs_sketches = True

    def __init__(self, alpha: float = 0.05):
        if not 0.0 < alpha < 1.0:
            raise UsageError(f"alpha must be in (0, 1), got {alpha}")
        self.alpha = alpha

    def consistency_check(self, red: State, blue: State) -> bool:
        return consistency_check(red, blue, self.alpha)

    def assign_score(self, red: State, blue: State) -> float:
        return assign_score(red, blue)

    def witnesses(self, red: State, blue: State):
        return (red, blue)

    def __repr__(self) -> str:
        return f"SketchHeuristic(alpha={self.alpha})"
