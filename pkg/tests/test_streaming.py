from __future__ import annotations

import random

import pytest

from streampdfa.alergia import AlergiaHeuristic
from streampdfa.automaton import Pdfa, StateColor
from streampdfa.cms import CmsConfig
from streampdfa.dataio import Dataset
from streampdfa.errors import InputDataError, UsageError
from streampdfa.sketch_heuristic import SketchHeuristic
from streampdfa.streaming import StreamParams, ingest, live_stats, run_stream


def sketch_params(**kw) -> StreamParams:
    kw.setdefault("heuristic", SketchHeuristic(alpha=0.05))
    kw.setdefault("cms", CmsConfig(width=16, depth=2, seed=4))
    kw.setdefault("n_futures", 2)
    return StreamParams(**kw)


def fresh_hypothesis(params: StreamParams, alphabet_size: int = 3) -> Pdfa:
    return Pdfa(
        alphabet_size,
        sketch_config=params.cms if params.with_sketches else None,
        n_futures=params.n_futures if params.with_sketches else 0,
    )


def assert_frontier_invariants(h: Pdfa):
    """Whites own no structure; memory stays bounded by the fringe."""
    counts = {c: 0 for c in StateColor}
    for s in h.states.values():
        counts[s.color] += 1
        if s.color == StateColor.WHITE:
            assert not s.outgoing, f"white q{s.id} has outgoing edges"
    a = h.alphabet_size
    bound = counts[StateColor.RED] * (1 + a) + counts[StateColor.BLUE] * a + 1
    assert len(h.states) <= bound


def test_ingest_trace_two_symbols():
    params = sketch_params()
    h = fresh_hypothesis(params)
    ingest(h, [0, 1], params)
    root = h.root_state()
    assert root.size == 1 and root.termination_count == 0
    assert root.outgoing[0].count == 1
    child = root.outgoing[0].target
    assert child.color == StateColor.WHITE
    assert child.size == 1 and child.termination_count == 0
    # white child stops the walk: no grandchild, no termination recorded
    assert not child.outgoing
    assert len(h.states) == 2
    # root saw future [0, 1]; child saw future [1] then end-of-sequence
    assert root.sketches.per_future[0].query(0) == 1
    assert root.sketches.per_future[1].query(1) == 1
    assert child.sketches.per_future[0].query(1) == 1
    assert child.sketches.per_future[1].query_termination() == 1
    assert h.ingested == 1


def test_ingest_termination_only_at_stored_end():
    params = sketch_params()
    h = fresh_hypothesis(params)
    ingest(h, [0, 1], params)  # ends beyond the stored frontier
    child = h.root_state().outgoing[0].target
    assert child.termination_count == 0
    ingest(h, [0], params)  # ends exactly at the stored child
    assert child.termination_count == 1
    ingest(h, [], params)  # ends at the root
    assert h.root_state().termination_count == 1


def test_ingest_white_accumulates_without_structure():
    params = sketch_params()
    h = fresh_hypothesis(params)
    for _ in range(5):
        ingest(h, [0, 1, 2], params)
    child = h.root_state().outgoing[0].target
    assert child.color == StateColor.WHITE
    assert child.size == 5
    assert not child.outgoing
    # the suffix beyond the white is summarized, not stored
    assert child.sketches.per_future[0].query(1) == 5
    assert child.sketches.per_future[1].query(2) == 5
    assert len(h.states) == 2


def test_ingest_threshold_promotion_to_blue():
    params = sketch_params(threshold=3, batch_size=10)
    h = fresh_hypothesis(params)
    for _ in range(2):
        ingest(h, [1], params)
    child = h.root_state().outgoing[1].target
    assert child.color == StateColor.WHITE
    ingest(h, [1], params)
    assert child.color == StateColor.BLUE  # crossed t with a red parent
    # blue states extend structure on the next pass
    ingest(h, [1, 0], params)
    assert child.outgoing[0].target.color == StateColor.WHITE


def test_ingest_rejects_foreign_symbols_without_mutating():
    params = sketch_params()
    h = fresh_hypothesis(params)
    with pytest.raises(InputDataError):
        ingest(h, [0, 7], params)
    assert h.root_state().size == 0  # validated before any mutation
    assert h.ingested == 0


def test_root_size_equals_ingest_count():
    params = sketch_params(threshold=2, batch_size=1000)
    h = fresh_hypothesis(params)
    rng = random.Random(3)
    n = 500
    for _ in range(n):
        seq = [rng.randrange(3) for _ in range(rng.randrange(6))]
        ingest(h, seq, params)
    assert h.root_state().size == n
    assert h.ingested == n


def test_stream_params_validation():
    with pytest.raises(UsageError):
        sketch_params(batch_size=0)
    with pytest.raises(UsageError):
        sketch_params(threshold=0)
    with pytest.raises(UsageError):
        StreamParams(heuristic=AlergiaHeuristic(alpha=0.05, k=2))
    StreamParams(heuristic=AlergiaHeuristic(alpha=0.05, k=1))  # k <= 1 fine


def test_run_stream_invariants_at_every_step():
    rng = random.Random(11)
    data = Dataset(3, [
        [rng.randrange(3) for _ in range(rng.randrange(8))] for _ in range(2000)
    ])
    params = sketch_params(batch_size=100, threshold=20)
    events = []

    def observer(kind, h):
        events.append(kind)
        assert_frontier_invariants(h)

    model = run_stream(data, params, observer=observer)
    assert model.frozen
    assert events.count("merge_phase") == 21  # 20 full batches plus the flush
    assert events.count("ingest") == 2000
    assert model.ingested == 2000


def test_run_stream_with_alergia_carries_no_sketches():
    rng = random.Random(2)
    data = Dataset(2, [[rng.randrange(2) for _ in range(4)] for _ in range(300)])
    params = StreamParams(heuristic=AlergiaHeuristic(alpha=0.05, k=1),
                          batch_size=50, threshold=10)
    model = run_stream(data, params)
    assert all(s.sketches is None for s in model.states.values())
    stats = live_stats(model)
    assert stats.sketch_bytes == 0


def test_run_stream_requires_alphabet_size():
    params = sketch_params()
    with pytest.raises(UsageError):
        run_stream(iter([[0]]), params)


def test_live_stats_counts_and_sketch_bytes():
    params = sketch_params(threshold=1, batch_size=10_000)
    h = fresh_hypothesis(params)
    ingest(h, [0], params)
    ingest(h, [1, 2], params)
    stats = live_stats(h)
    assert stats.stored_states == len(h.states)
    assert stats.reds == 1
    # threshold 1: children of the red root turn blue on their first visit
    assert stats.blues == 2
    assert stats.whites == stats.stored_states - 3
    per_state = params.n_futures * params.cms.depth * (params.cms.width + 1) * 8
    assert stats.sketch_bytes == stats.stored_states * per_state
    assert stats.sequences == 2
    assert stats.retired == 0


def test_stream_alergia_uses_pass_size_denominator():
    # a frontier white keeps size > structural mass until freeze; the test
    # pins that ingest counts passes, which is what the check divides by
    params = StreamParams(heuristic=AlergiaHeuristic(alpha=0.05, k=0),
                          batch_size=10_000, threshold=10_000)
    h = Pdfa(2)
    for _ in range(10):
        ingest(h, [0, 1], params)
    white = h.root_state().outgoing[0].target
    assert white.size == 10
    assert white.structural_mass() == 0  # nothing stored below or at it
