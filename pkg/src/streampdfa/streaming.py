"""Streaming learner: one pass over the sequence source, periodic merges.

Each sequence walks the hypothesis from the root. Every stored state it
visits counts the pass and records the remaining future into its sketches;
red and blue states create missing children (white), while white states end
the structural walk, which is what bounds live memory by the fringe:
reds * (1 + alphabet) + blues * alphabet + 1 stored states. Terminations are
counted only when the sequence actually ends at a stored state. Every
batch_size sequences the merge engine runs to a fixpoint, and once the
source is exhausted a final fixpoint runs before the model freezes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .automaton import Edge, Pdfa, StateColor, freeze
from .cms import CmsConfig
from .errors import InputDataError, UsageError
from .merging import Heuristic, merge_until_fixpoint


@dataclass
class StreamParams:
    """Knobs for one streaming run. `with_sketches` defaults to whatever the
    heuristic declares it needs."""

    heuristic: Heuristic
    batch_size: int = 500
    threshold: int = 100
    n_futures: int = 2
    cms: CmsConfig = field(default_factory=CmsConfig)
    with_sketches: bool | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise UsageError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.threshold < 1:
            raise UsageError(f"threshold must be >= 1, got {self.threshold}")
        if self.with_sketches is None:
            self.with_sketches = bool(getattr(self.heuristic, "needs_sketches", False))
        if self.with_sketches and self.n_futures < 1:
            raise UsageError(f"n_futures must be >= 1, got {self.n_futures}")
        if getattr(self.heuristic, "k", 0) >= 2:
            raise UsageError("k >= 2 compares layers a stream never stores; use batch mode")


@dataclass(frozen=True)
class StatsRecord:
    reds: int
    blues: int
    whites: int
    stored_states: int
    retired: int
    sequences: int
    sketch_bytes: int


def live_stats(h: Pdfa) -> StatsRecord:
    counts = h.color_counts()
    carrying = sum(1 for s in h.states.values() if s.sketches is not None)
    if h.sketch_config is not None:
        per_state = h.n_futures * h.sketch_config.depth * (h.sketch_config.width + 1) * 8
    else:
        per_state = 0
    return StatsRecord(
        reds=counts[StateColor.RED],
        blues=counts[StateColor.BLUE],
        whites=counts[StateColor.WHITE],
        stored_states=len(h.states),
        retired=h.retired_total,
        sequences=h.ingested,
        sketch_bytes=carrying * per_state,
    )


def ingest(h: Pdfa, seq, params: StreamParams) -> None:
    """Walk one sequence through the hypothesis, updating counts, sketches,
    structure, and threshold promotions."""
    h.require_mutable()
    a_size = h.alphabet_size
    for a in seq:
        if not 0 <= a < a_size:
            raise InputDataError(f"symbol {a} outside alphabet [0, {a_size})")
    t = params.threshold
    q = h.root_state()
    i = 0
    end = len(seq)
    while True:
        q.size += 1
        h.bump(q)
        if q.sketches is not None:
            q.sketches.record_futures(seq, i)
        if (q.color == StateColor.WHITE and q.size >= t
                and q.parent is not None and q.parent.color == StateColor.RED):
            q.color = StateColor.BLUE
        if i == end:
            q.termination_count += 1
            break
        a = seq[i]
        e = q.outgoing.get(a)
        if e is not None:
            e.count += 1
            q = e.target
            i += 1
        elif q.color != StateColor.WHITE:
            child = h.new_state(StateColor.WHITE, parent=q, in_symbol=a)
            q.outgoing[a] = Edge(child, 1)
            q = child
            i += 1
        else:
            # white frontier: the walk ends here, the suffix only feeds the
            # sketches above
            break
    h.ingested += 1


def run_stream(
    source,
    params: StreamParams,
    observer: Callable[[str, Pdfa], None] | None = None,
) -> Pdfa:
    """Learn a frozen model from an iterable sequence source exposing
    `alphabet_size`. The observer, when given, is called after every ingest
    ("ingest") and every merge phase ("merge_phase")."""
    alphabet_size = getattr(source, "alphabet_size", None)
    if alphabet_size is None:
        raise UsageError("stream source must expose alphabet_size")
    h = Pdfa(
        alphabet_size,
        sketch_config=params.cms if params.with_sketches else None,
        n_futures=params.n_futures if params.with_sketches else 0,
    )
    since_merge = 0
    for seq in source:
        ingest(h, seq, params)
        since_merge += 1
        if observer is not None:
            observer("ingest", h)
        if since_merge >= params.batch_size:
            merge_until_fixpoint(h, params.heuristic, threshold=params.threshold)
            since_merge = 0
            if observer is not None:
                observer("merge_phase", h)
    merge_until_fixpoint(h, params.heuristic, threshold=params.threshold)
    if observer is not None:
        observer("merge_phase", h)
    freeze(h)
    return h
