from __future__ import annotations

import math
import random

import numpy as np
import pytest

from streampdfa.alergia import AlergiaHeuristic, alergia_check, alergia_score
from streampdfa.automaton import Edge, State, StateColor
from streampdfa.cms import CmsConfig, CountMinSketch, SketchSet
from streampdfa.errors import UsageError
from streampdfa.sketch_heuristic import (
    SketchHeuristic,
    assign_score,
    consistency_check,
    hoeffding_bound,
    hoeffding_row_check,
)
from conftest import exact_count_state, find_injective_seed


# -- Hoeffding row test --------------------------------------------------


def reference_bound(alpha, n1, n2):
    # written out independently of the implementation
    return math.sqrt(math.log(2.0 / alpha) / 2.0) * (n1 ** -0.5 + n2 ** -0.5)


def test_hoeffding_bound_frozen_values():
    assert hoeffding_bound(0.05, 100, 100) == pytest.approx(0.271620303148124, abs=1e-12)
    assert hoeffding_bound(0.05, 1, 1) == pytest.approx(2.716203031481239, abs=1e-12)
    assert hoeffding_bound(0.05, 100, 100) == pytest.approx(reference_bound(0.05, 100, 100))


def test_hoeffding_row_check_hand_cases():
    # n1 = n2 = 100, max deviation 0.10 < 0.2716: compatible
    assert hoeffding_row_check([10, 20, 70], [15, 25, 60], alpha=0.05)
    # same proportions at n = 10000 shrink the bound to 0.02716: incompatible
    assert not hoeffding_row_check([1000, 2000, 7000], [1500, 2500, 6000], alpha=0.05)
    # singleton rows can never exceed a bound above 1
    assert hoeffding_row_check([1, 0, 0], [0, 1, 0], alpha=0.05)


def test_hoeffding_row_check_vacuous_on_empty_evidence():
    assert hoeffding_row_check([0, 0, 0], [50, 0, 0], alpha=0.05)
    assert hoeffding_row_check([0, 0], [0, 0], alpha=0.05)


def test_hoeffding_row_check_shape_guard():
    with pytest.raises(UsageError):
        hoeffding_row_check([1, 2], [1, 2, 3])


def test_hoeffding_row_check_matches_reference_on_random_rows():
    rng = random.Random(5)
    for _ in range(300):
        width = rng.randint(2, 10)
        r1 = [rng.randrange(30) for _ in range(width)]
        r2 = [rng.randrange(30) for _ in range(width)]
        n1, n2 = sum(r1), sum(r2)
        if n1 == 0 or n2 == 0:
            expected = True
        else:
            bound = reference_bound(0.05, n1, n2)
            expected = max(abs(x / n1 - y / n2) for x, y in zip(r1, r2)) < bound
        assert hoeffding_row_check(r1, r2, 0.05) == expected


# -- sketch consistency over states ---------------------------------------


def sketch_state(state_id, events_per_future, cfg, n_futures):
    """events_per_future: list of lists of symbol ids, -1 for termination."""
    s = State(state_id, StateColor.RED, sketches=SketchSet(cfg, n_futures))
    for m, events in enumerate(events_per_future):
        sk = s.sketches.per_future[m]
        for e in events:
            sk.store_termination() if e < 0 else sk.store(e)
    s.size = len(events_per_future[0])
    return s


def test_consistency_check_equals_per_row_hoeffding():
    rng = random.Random(77)
    cfg = CmsConfig(width=16, depth=3, seed=13)
    for _ in range(200):
        nf = rng.randint(1, 3)
        events1 = [[rng.randrange(-1, 8) for _ in range(rng.randrange(40))] for _ in range(nf)]
        events2 = [[rng.randrange(-1, 8) for _ in range(rng.randrange(40))] for _ in range(nf)]
        s1 = sketch_state(1, events1, cfg, nf)
        s2 = sketch_state(2, events2, cfg, nf)
        s2.color = StateColor.BLUE
        expected = all(
            hoeffding_row_check(
                s1.sketches.per_future[m].counts[r],
                s2.sketches.per_future[m].counts[r],
                0.05,
            )
            for m in range(nf)
            for r in range(cfg.depth)
        )
        assert consistency_check(s1, s2, 0.05) == expected


def test_consistency_check_vacuous_when_one_side_empty():
    cfg = CmsConfig(width=16, depth=2, seed=1)
    s1 = sketch_state(1, [[1, 2, 3]], cfg, 1)
    s2 = sketch_state(2, [[]], cfg, 1)
    assert consistency_check(s1, s2)


def test_consistency_check_requires_compatible_sketches():
    s1 = sketch_state(1, [[1]], CmsConfig(width=16, depth=2, seed=1), 1)
    s2 = sketch_state(2, [[1]], CmsConfig(width=16, depth=2, seed=2), 1)
    with pytest.raises(UsageError):
        consistency_check(s1, s2)
    bare = State(3, StateColor.BLUE)
    with pytest.raises(UsageError):
        consistency_check(s1, bare)


# -- cosine score ----------------------------------------------------------


def cosine(u, v):
    du = math.sqrt(sum(x * x for x in u))
    dv = math.sqrt(sum(x * x for x in v))
    if du == 0 and dv == 0:
        return 1.0
    if du == 0 or dv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (du * dv)


def test_assign_score_single_row_worked_example():
    # vectors (2, 4, 3) vs (3, 15, 1): cosine 0.8358
    cfg = CmsConfig(width=8, depth=1, seed=21)
    events1 = [[0] * 2 + [1] * 4 + [2] * 3]
    events2 = [[0] * 3 + [1] * 15 + [2] * 1]
    s1 = sketch_state(1, events1, cfg, 1)
    s2 = sketch_state(2, events2, cfg, 1)
    # make sure the three symbols landed in distinct columns for this seed
    cols = {cfg.columns(e)[0] for e in (0, 1, 2)}
    assert len(cols) == 3
    assert assign_score(s1, s2) == pytest.approx(0.8358, abs=1e-4)


def test_assign_score_matches_reference_cosine_mean():
    rng = random.Random(123)
    cfg = CmsConfig(width=8, depth=3, seed=5)
    for _ in range(100):
        nf = rng.randint(1, 3)
        ev1 = [[rng.randrange(-1, 6) for _ in range(rng.randrange(25))] for _ in range(nf)]
        ev2 = [[rng.randrange(-1, 6) for _ in range(rng.randrange(25))] for _ in range(nf)]
        s1 = sketch_state(1, ev1, cfg, nf)
        s2 = sketch_state(2, ev2, cfg, nf)
        expected = 0.0
        for m in range(nf):
            rows = [
                cosine(s1.sketches.per_future[m].counts[r], s2.sketches.per_future[m].counts[r])
                for r in range(cfg.depth)
            ]
            expected += sum(rows) / len(rows)
        got = assign_score(s1, s2)
        assert got == pytest.approx(expected, abs=1e-12)
        assert 0.0 <= got <= nf + 1e-12


def test_assign_score_zero_conventions():
    cfg = CmsConfig(width=8, depth=2, seed=9)
    empty1 = sketch_state(1, [[]], cfg, 1)
    empty2 = sketch_state(2, [[]], cfg, 1)
    assert assign_score(empty1, empty2) == pytest.approx(1.0)  # both-zero rows count 1
    loaded = sketch_state(3, [[1, 2]], cfg, 1)
    assert assign_score(empty1, loaded) == pytest.approx(0.0)  # one-zero rows count 0


# -- alergia ----------------------------------------------------------------


def test_alergia_check_identical_distributions_pass():
    a = exact_count_state(1, StateColor.RED, {0: 30, 1: 10}, 10)
    b = exact_count_state(2, StateColor.BLUE, {0: 30, 1: 10}, 10)
    assert alergia_check(a, b, alpha=0.05, k=0)


def test_alergia_check_rejects_clear_mismatch():
    a = exact_count_state(1, StateColor.RED, {0: 900, 1: 50}, 50)
    b = exact_count_state(2, StateColor.BLUE, {0: 50, 1: 900}, 50)
    assert not alergia_check(a, b, alpha=0.05, k=0)


def test_alergia_check_vacuous_on_zero_size():
    a = exact_count_state(1, StateColor.RED, {}, 0)
    b = exact_count_state(2, StateColor.BLUE, {0: 500, 1: 400}, 100)
    assert alergia_check(a, b, alpha=0.05, k=0)
    assert alergia_check(a, b, alpha=0.05, k=3)


def test_alergia_check_union_of_symbols_is_compared():
    # an edge present on only one side still contributes its deviation
    a = exact_count_state(1, StateColor.RED, {0: 1000}, 0)
    b = exact_count_state(2, StateColor.BLUE, {1: 1000}, 0)
    assert not alergia_check(a, b, alpha=0.05, k=0)


def test_alergia_k_recursion_catches_deep_mismatch():
    a = exact_count_state(1, StateColor.RED, {0: 500}, 500)
    b = exact_count_state(2, StateColor.BLUE, {0: 500}, 500)
    # level 0 agrees; make the children disagree violently
    a.outgoing[0].target = exact_count_state(3, StateColor.WHITE, {0: 500}, 0)
    b.outgoing[0].target = exact_count_state(4, StateColor.WHITE, {1: 500}, 0)
    assert alergia_check(a, b, alpha=0.05, k=0)
    assert not alergia_check(a, b, alpha=0.05, k=1)


def test_alergia_k_missing_children_pass_vacuously():
    a = exact_count_state(1, StateColor.RED, {0: 500}, 500)
    b = exact_count_state(2, StateColor.BLUE, {1: 30}, 970)
    # same level-0 shape strongly differs on symbol presence; force agreement
    b2 = exact_count_state(5, StateColor.BLUE, {0: 500}, 500)
    b2.outgoing[0].target = exact_count_state(6, StateColor.WHITE, {}, 0)
    # a's child vs b2's empty child: zero evidence below, vacuous at any k
    assert alergia_check(a, b2, alpha=0.05, k=4)


def test_alergia_score_overlap_evidence():
    a = exact_count_state(1, StateColor.RED, {0: 60, 1: 40}, 0)
    b = exact_count_state(2, StateColor.BLUE, {0: 80, 2: 20}, 0)
    assert alergia_score(a, b, k=0) == 100.0
    # k=1 adds min sizes of the shared-symbol children (dummies have size 0)
    assert alergia_score(a, b, k=1) == 100.0
    a.outgoing[0].target.size = 60
    b.outgoing[0].target.size = 80
    assert alergia_score(a, b, k=1) == 160.0


def test_alergia_heuristic_validation_and_witnesses():
    with pytest.raises(UsageError):
        AlergiaHeuristic(alpha=0.0)
    with pytest.raises(UsageError):
        AlergiaHeuristic(k=-1)
    h = AlergiaHeuristic(alpha=0.05, k=1)
    a = exact_count_state(1, StateColor.RED, {0: 10}, 5)
    b = exact_count_state(2, StateColor.BLUE, {0: 10}, 5)
    wit = {s.id for s in h.witnesses(a, b)}
    assert a.id in wit and b.id in wit
    assert a.outgoing[0].target.id in wit  # shared child compared at k=1


# -- cross-heuristic equivalence -------------------------------------------


def test_sketch_depth1_consistency_equals_alergia_k0():
    alphabet_size = 10
    seed = find_injective_seed(64, 4, alphabet_size)
    cfg = CmsConfig(width=64, depth=4, seed=seed)
    rng = random.Random(42)
    agree = 0
    for trial in range(300):
        counts1 = {a: rng.randrange(25) for a in range(alphabet_size) if rng.random() < 0.5}
        counts2 = {a: rng.randrange(25) for a in range(alphabet_size) if rng.random() < 0.5}
        t1, t2 = rng.randrange(10), rng.randrange(10)
        s1 = exact_count_state(1, StateColor.RED, counts1, t1, cms_config=cfg, n_futures=1)
        s2 = exact_count_state(2, StateColor.BLUE, counts2, t2, cms_config=cfg, n_futures=1)
        sketch_verdict = consistency_check(s1, s2, alpha=0.05)
        alergia_verdict = alergia_check(s1, s2, alpha=0.05, k=0)
        assert sketch_verdict == alergia_verdict
        agree += 1
    assert agree == 300


def test_sketch_heuristic_validation():
    with pytest.raises(UsageError):
        SketchHeuristic(alpha=1.5)
    h = SketchHeuristic()
    assert h.needs_sketches
    a = sketch_state(1, [[0, 1]], CmsConfig(width=8, depth=2, seed=1), 1)
    b = sketch_state(2, [[0, 1]], CmsConfig(width=8, depth=2, seed=1), 1)
    assert h.witnesses(a, b) == (a, b)
    assert h.consistency_check(a, b)
    assert h.assign_score(a, b) > 0
