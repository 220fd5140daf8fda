"""Red-blue state merging: fold, exact undo, scoring loop.

merge(red, blue) retargets blue's incoming edge onto red and folds blue's
subtree into red's, adding counts and sketches cell-exactly. Every mutation
is journaled so undo can replay it in reverse and restore the hypothesis
exactly. Retired states stay referenced by their journal until the enclosing
batch commits, which is what makes the sketch subtraction in undo exact.

merge_until_fixpoint keeps a lazy max-heap of evaluated (red, blue) pairs.
Each evaluation records the witness states it actually read; mutating any
witness re-queues the affected pairs. Semantics are identical to repeatedly
calling best_merge, just without rescanning every pair per round.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Protocol, Sequence

from .automaton import Edge, Pdfa, State, StateColor
from .cms import CmsConfig
from .errors import InputDataError, InvariantViolation, UsageError


class Heuristic(Protocol):
    """Pure pairwise judgement over state data. Implementations must not
    mutate states, and witnesses() must list every state whose data the
    other two methods can read for the given pair (endpoints included)."""

    def consistency_check(self, red: State, blue: State) -> bool: ...

    def assign_score(self, red: State, blue: State) -> float: ...

    def witnesses(self, red: State, blue: State) -> Sequence[State]: ...


@dataclass(frozen=True)
class MergeCandidate:
    red: int
    blue: int
    score: float


class MergeJournal:
    """Ordered log of primitive mutations from one merge.

    Ops are applied forward during merge and replayed in reverse by undo.
    Journals chain through Pdfa._journal_top so out-of-order undo is
    detectable; commit_merges drops the chain and with it the retired
    state objects.
    """

    __slots__ = ("ops", "touched", "undone", "prev", "hypothesis")

    def __init__(self):
        self.ops: list[tuple] = []
        self.touched: set[int] = set()   # live states whose merge-relevant data changed
        self.undone = False
        self.prev = None
        self.hypothesis = None

    def attach(self, h: Pdfa) -> None:
        if self.hypothesis is not None:
            raise UsageError("journal already used by a merge")
        self.hypothesis = h
        self.prev = h._journal_top
        h._journal_top = self

    def retired_states(self) -> list[State]:
        return [op[1] for op in self.ops if op[0] == "retire"]


def build_apta(data, with_sketches: bool = False, n_futures: int = 0,
               cms_config: CmsConfig | None = None) -> Pdfa:
    """Prefix-tree acceptor over a full dataset: root red, root's children
    blue, everything deeper white. With sketches enabled, every visited
    state records the remaining future of the pass."""
    if not data.sequences:
        raise InputDataError("empty dataset: nothing to build a tree from")
    if with_sketches:
        if cms_config is None:
            cms_config = CmsConfig()
        if n_futures < 1:
            raise UsageError("n_futures must be >= 1 when sketches are enabled")
    h = Pdfa(
        data.alphabet_size,
        sketch_config=cms_config if with_sketches else None,
        n_futures=n_futures if with_sketches else 0,
    )
    a_size = data.alphabet_size
    root = h.root_state()
    for seq in data.sequences:
        for a in seq:
            if not 0 <= a < a_size:
                raise InputDataError(f"symbol {a} outside alphabet [0, {a_size})")
        q = root
        q.size += 1
        if q.sketches is not None:
            q.sketches.record_futures(seq, 0)
        for i, a in enumerate(seq):
            e = q.outgoing.get(a)
            if e is None:
                child = h.new_state(StateColor.WHITE, parent=q, in_symbol=a)
                e = Edge(child, 0)
                q.outgoing[a] = e
            e.count += 1
            q = e.target
            q.size += 1
            if q.sketches is not None:
                q.sketches.record_futures(seq, i + 1)
        q.termination_count += 1
    for e in root.outgoing.values():
        e.target.color = StateColor.BLUE
    h.ingested = len(data.sequences)
    return h


def merge(h: Pdfa, red: int, blue: int, journal: MergeJournal) -> None:
    """Merge blue into red, folding blue's subtree. Fully journaled."""
    h.require_mutable()
    r = h.state(red)
    b = h.state(blue)
    if r.color != StateColor.RED:
        raise UsageError(f"merge target q{red} is {r.color.name}, not RED")
    if b.color != StateColor.BLUE:
        raise UsageError(f"merge source q{blue} is {b.color.name}, not BLUE")
    if b.parent is None:
        raise UsageError(f"blue q{blue} has no parent edge to retarget")
    p = b.parent
    edge = p.outgoing.get(b.in_symbol)
    if edge is None or edge.target is not b:
        raise InvariantViolation(f"parent edge of q{blue} is inconsistent")
    journal.attach(h)
    ops = journal.ops
    ops.append(("edge_target", p, b.in_symbol, b))
    edge.target = r
    h.bump(p)
    journal.touched.add(p.id)

    # Fold blue's subtree into red's, depth-first. Sources (the y side) are
    # nodes of blue's tree and are each retired exactly once with their data
    # untouched, which undo relies on for exact sketch subtraction.
    stack = [(r, b)]
    while stack:
        x, y = stack.pop()
        ops.append(("stats", x, y.size, y.termination_count))
        x.size += y.size
        x.termination_count += y.termination_count
        if x.sketches is not None and y.sketches is not None:
            x.sketches.add(y.sketches)
            ops.append(("sketch_add", x, y))
        h.bump(x)
        journal.touched.add(x.id)
        for a, ye in y.outgoing.items():
            xe = x.outgoing.get(a)
            if xe is None:
                x.outgoing[a] = Edge(ye.target, ye.count)
                ops.append(("edge_new", x, a))
                child = ye.target
                ops.append(("parent", child, child.parent, child.in_symbol))
                child.parent = x
                child.in_symbol = a
            else:
                ops.append(("edge_count", x, a, ye.count))
                xe.count += ye.count
                stack.append((xe.target, ye.target))
        ops.append(("retire", y))
        del h.states[y.id]
        h.retired_total += 1


def undo(h: Pdfa, journal: MergeJournal) -> None:
    """Replay the journal in reverse, restoring the hypothesis exactly."""
    h.require_mutable()
    if journal.undone:
        raise InvariantViolation("journal already undone")
    if h._journal_top is not journal:
        raise InvariantViolation("undo out of order: a later merge is still applied")
    for op in reversed(journal.ops):
        kind = op[0]
        if kind == "retire":
            s = op[1]
            h.states[s.id] = s
            h.retired_total -= 1
        elif kind == "edge_count":
            _, x, a, delta = op
            x.outgoing[a].count -= delta
            h.bump(x)
        elif kind == "parent":
            _, child, old_parent, old_symbol = op
            child.parent = old_parent
            child.in_symbol = old_symbol
        elif kind == "edge_new":
            _, x, a = op
            del x.outgoing[a]
            h.bump(x)
        elif kind == "sketch_add":
            _, x, y = op
            x.sketches.subtract(y.sketches)
            h.bump(x)
        elif kind == "stats":
            _, x, dsize, dterm = op
            x.size -= dsize
            x.termination_count -= dterm
            h.bump(x)
        elif kind == "edge_target":
            _, p, a, old_target = op
            p.outgoing[a].target = old_target
            h.bump(p)
        else:
            raise InvariantViolation(f"unknown journal op {kind!r}")
    journal.undone = True
    h._journal_top = journal.prev


def commit_merges(h: Pdfa) -> None:
    """Commit the current merge batch: journals (and the retired states they
    keep alive) are dropped, making every applied merge permanent."""
    h._journal_top = None


def best_merge(h: Pdfa, heuristic: Heuristic) -> MergeCandidate | None:
    """Highest-scoring consistent (red, blue) pair, or None.

    Ties break toward the smaller red creation index, then the smaller blue
    creation index."""
    best = None
    reds = sorted(h.reds(), key=lambda s: s.id)
    blues = sorted(h.blues(), key=lambda s: s.id)
    for r in reds:
        for b in blues:
            if heuristic.consistency_check(r, b):
                score = heuristic.assign_score(r, b)
                if best is None or score > best.score:
                    best = MergeCandidate(r.id, b.id, score)
    return best


def promote(h: Pdfa, blue: int, threshold: int = 1,
            heuristic: Heuristic | None = None, strict: bool = False) -> list[State]:
    """Recolor a blue state red; its white children at or above the size
    threshold become blue. Color-only: no count or sketch changes.

    In strict mode the blue must have no consistent merge left (requires a
    heuristic to check with)."""
    h.require_mutable()
    b = h.state(blue)
    if b.color != StateColor.BLUE:
        raise UsageError(f"promote target q{blue} is {b.color.name}, not BLUE")
    if strict:
        if heuristic is None:
            raise UsageError("strict promotion needs a heuristic to verify with")
        for r in sorted(h.reds(), key=lambda s: s.id):
            if heuristic.consistency_check(r, b):
                raise UsageError(
                    f"q{blue} still has a consistent merge with q{r.id}; refusing to promote"
                )
    b.color = StateColor.RED
    h.bump(b)
    newly_blue = []
    for e in b.outgoing.values():
        c = e.target
        if c.color == StateColor.WHITE and c.size >= threshold:
            c.color = StateColor.BLUE
            newly_blue.append(c)
    return newly_blue


def merge_until_fixpoint(h: Pdfa, heuristic: Heuristic, threshold: int = 1) -> int:
    """Merge the best consistent pair until none exists, promoting the
    largest remaining blue (ties: oldest) when stuck. Returns merge count.

    Equivalent to looping best_merge/merge/promote; the heap plus witness
    invalidation only avoids rescanning unchanged pairs."""
    h.require_mutable()
    merges = 0
    heap: list[tuple[float, int, int, int]] = []   # (-score, red_id, blue_id, token)
    current: dict[tuple[int, int], tuple[int, float] | None] = {}
    watchers: dict[int, set[tuple[int, int]]] = {}
    tokens = itertools.count()

    red_ids: list[int] = sorted(s.id for s in h.reds())
    blue_ids: set[int] = {s.id for s in h.blues()}

    def evaluate(r: State, b: State) -> None:
        pair = (r.id, b.id)
        for w in heuristic.witnesses(r, b):
            watchers.setdefault(w.id, set()).add(pair)
        if heuristic.consistency_check(r, b):
            tok = next(tokens)
            score = heuristic.assign_score(r, b)
            current[pair] = (tok, score)
            heapq.heappush(heap, (-score, r.id, b.id, tok))
        else:
            current[pair] = None

    for rid in red_ids:
        r = h.states[rid]
        for bid in sorted(blue_ids):
            evaluate(r, h.states[bid])

    while True:
        cand = None
        while heap:
            neg_score, rid, bid, tok = heap[0]
            entry = current.get((rid, bid))
            if entry is None or entry[0] != tok:
                heapq.heappop(heap)
                continue
            r = h.states.get(rid)
            b = h.states.get(bid)
            if (r is None or b is None
                    or r.color != StateColor.RED or b.color != StateColor.BLUE):
                heapq.heappop(heap)
                current.pop((rid, bid), None)
                continue
            cand = MergeCandidate(rid, bid, -neg_score)
            break

        if cand is not None:
            journal = MergeJournal()
            merge(h, cand.red, cand.blue, journal)
            merges += 1
            blue_ids.discard(cand.blue)
            # threshold recoloring: touched reds may have gained or grown
            # white children
            newly_blue: list[State] = []
            for sid in journal.touched:
                s = h.states.get(sid)
                if s is None or s.color != StateColor.RED:
                    continue
                for e in s.outgoing.values():
                    c = e.target
                    if c.color == StateColor.WHITE and c.size >= threshold:
                        c.color = StateColor.BLUE
                        newly_blue.append(c)
            # re-evaluate every pair that read a mutated state
            affected: set[tuple[int, int]] = set()
            for sid in journal.touched:
                pairs = watchers.pop(sid, None)
                if pairs:
                    affected |= pairs
            for rid, bid in affected:
                r = h.states.get(rid)
                b = h.states.get(bid)
                if (r is None or b is None
                        or r.color != StateColor.RED or b.color != StateColor.BLUE):
                    current.pop((rid, bid), None)
                    continue
                evaluate(r, b)
            for c in newly_blue:
                blue_ids.add(c.id)
                for rid in red_ids:
                    evaluate(h.states[rid], c)
            continue

        if not blue_ids:
            break
        # no consistent pair anywhere: promote the best-evidence blue
        blues = [h.states[bid] for bid in blue_ids]
        target = max(blues, key=lambda s: (s.size, -s.id))
        newly_blue = promote(h, target.id, threshold=threshold)
        blue_ids.discard(target.id)
        red_ids.append(target.id)
        for bid in sorted(blue_ids):
            evaluate(target, h.states[bid])
        for c in newly_blue:
            blue_ids.add(c.id)
            for rid in red_ids:
                evaluate(h.states[rid], c)

    commit_merges(h)
    return merges
