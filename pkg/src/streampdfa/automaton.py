"""Probabilistic DFA hypothesis: states, counts, probabilities, DOT export.

A hypothesis is a rooted graph of states over an integer alphabet
[0, alphabet_size). Each state keeps a pass count (size), an exact
termination count, outgoing edges with traversal counts, and optionally a
SketchSet summarizing the futures observed after it. String probability on a
frozen model is the product of per-step symbol probabilities times the final
probability of the state the walk ends in.

Edges and parent pointers hold State objects directly; state ids exist for
ordering, serialization, and DOT output.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

from .cms import CmsConfig, SketchSet
from .errors import InputDataError, UndefinedDistributionError, UsageError


class StateColor(IntEnum):
    RED = 0    # core: fixed, pairwise distinct
    BLUE = 1   # fringe: merge candidates, children of reds
    WHITE = 2  # frontier: no outgoing structure yet in stream mode


class Edge:
    """Deterministic labeled transition with a traversal count."""

    __slots__ = ("target", "count")

    def __init__(self, target: "State", count: int = 0):
        self.target = target
        self.count = count

    def __repr__(self) -> str:
        return f"Edge(->q{self.target.id}, count={self.count})"


class State:
    __slots__ = (
        "id", "color", "size", "termination_count", "outgoing",
        "parent", "in_symbol", "sketches", "version",
    )

    def __init__(
        self,
        state_id: int,
        color: StateColor,
        parent: "State | None" = None,
        in_symbol: int | None = None,
        sketches: SketchSet | None = None,
    ):
        self.id = state_id
        self.color = color
        self.size = 0
        self.termination_count = 0
        self.outgoing: dict[int, Edge] = {}
        self.parent = parent
        self.in_symbol = in_symbol
        self.sketches = sketches
        self.version = 0

    def structural_mass(self) -> int:
        """Terminations plus outgoing traversals: the mass the state can
        redistribute. Equals size except at stream-mode frontier states."""
        return self.termination_count + sum(e.count for e in self.outgoing.values())

    def __repr__(self) -> str:
        return (
            f"State(id={self.id}, color={self.color.name}, size={self.size}, "
            f"term={self.termination_count}, out={len(self.outgoing)})"
        )


@dataclass(frozen=True)
class SmoothingPolicy:
    """Floor applied to zero or missing probability factors."""

    floor: float = 1e-30


DEFAULT_SMOOTHING = SmoothingPolicy()


class Pdfa:
    """Hypothesis automaton. Mutable while learning, frozen for scoring.

    `states` holds live (reachable) states only; retired states survive in
    merge journals until the enclosing batch commits. When sketch_config is
    set, every new state is allocated a SketchSet at creation.
    """

    def __init__(
        self,
        alphabet_size: int,
        sketch_config: CmsConfig | None = None,
        n_futures: int = 0,
    ):
        if alphabet_size < 1:
            raise UsageError(f"alphabet_size must be >= 1, got {alphabet_size}")
        if sketch_config is not None and n_futures < 1:
            raise UsageError("n_futures must be >= 1 when sketches are enabled")
        self.alphabet_size = alphabet_size
        self.sketch_config = sketch_config
        self.n_futures = n_futures if sketch_config is not None else 0
        self.states: dict[int, State] = {}
        self._next_id = 0
        self.frozen = False
        self.retired_total = 0
        self.ingested = 0
        self.peak_states = 0
        self._clock = 0
        self._journal_top = None  # most recent uncommitted MergeJournal
        self.root = self.new_state(StateColor.RED).id

    # -- construction ------------------------------------------------------

    def new_state(
        self,
        color: StateColor,
        parent: "State | None" = None,
        in_symbol: int | None = None,
    ) -> State:
        sketches = None
        if self.sketch_config is not None:
            sketches = SketchSet(self.sketch_config, self.n_futures)
        s = State(self._next_id, color, parent, in_symbol, sketches)
        self._next_id += 1
        self.states[s.id] = s
        if len(self.states) > self.peak_states:
            self.peak_states = len(self.states)
        return s

    def state(self, state_id: int) -> State:
        try:
            return self.states[state_id]
        except KeyError:
            raise UsageError(f"state {state_id} is not live") from None

    def root_state(self) -> State:
        return self.states[self.root]

    def bump(self, s: State) -> None:
        """Advance the state's version; any mutation must call this so merge
        caches can detect staleness."""
        self._clock += 1
        s.version = self._clock

    def require_mutable(self) -> None:
        if self.frozen:
            raise UsageError("model is frozen; learning operations are disabled")

    # -- queries -----------------------------------------------------------

    def reds(self) -> list[State]:
        return [s for s in self.states.values() if s.color == StateColor.RED]

    def blues(self) -> list[State]:
        return [s for s in self.states.values() if s.color == StateColor.BLUE]

    def color_counts(self) -> dict[StateColor, int]:
        counts = {c: 0 for c in StateColor}
        for s in self.states.values():
            counts[s.color] += 1
        return counts


def symbol_prob(state: State, symbol: int) -> float:
    """S(q, a) = count(q, a) / size(q)."""
    if state.size == 0:
        raise UndefinedDistributionError(f"state {state.id} has zero mass")
    e = state.outgoing.get(symbol)
    return (e.count / state.size) if e is not None else 0.0


def final_prob(state: State) -> float:
    """F(q) = termination_count(q) / size(q)."""
    if state.size == 0:
        raise UndefinedDistributionError(f"state {state.id} has zero mass")
    return state.termination_count / state.size


def freeze(model: Pdfa) -> Pdfa:
    """Recompute sizes from structural mass and mark the model frozen.

    Stream-mode frontier states have pass counts larger than the mass they
    store (futures beyond them were never expanded), so sizes are rebuilt as
    termination + outgoing traversals to make F + sum(S) = 1 hold everywhere.
    """
    for s in model.states.values():
        s.size = s.structural_mass()
    model.frozen = True
    return model


def probability(
    model: Pdfa,
    seq: Sequence[int],
    smoothing: SmoothingPolicy = DEFAULT_SMOOTHING,
) -> float:
    """Probability of `seq` under the frozen model.

    Any zero or missing factor contributes the smoothing floor: a missing
    transition or an empty distribution ends the walk with one floor factor,
    and a zero final probability multiplies the floor in.
    """
    if not model.frozen:
        raise UsageError("probability requires a frozen model")
    a_size = model.alphabet_size
    for a in seq:
        if not 0 <= a < a_size:
            raise InputDataError(f"symbol {a} outside alphabet [0, {a_size})")
    floor = smoothing.floor
    q = model.states[model.root]
    p = 1.0
    for a in seq:
        e = q.outgoing.get(a)
        if e is None or q.size <= 0:
            return p * floor
        p *= e.count / q.size
        q = e.target
    if q.size <= 0 or q.termination_count <= 0:
        return p * floor
    return p * (q.termination_count / q.size)


def _dot_quantity(x: float) -> str:
    """Probability formatted to 3 decimals with trailing zeros trimmed."""
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return s if s else "0"


_FILL = {StateColor.RED: "indianred1", StateColor.BLUE: "lightblue", StateColor.WHITE: "white"}


def export_dot(model: Pdfa, name: str = "hypothesis") -> str:
    """Graphviz DOT text: nodes labeled with size and final probability,
    edges with symbol and transition probability, colors as fills."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle, style=filled];"]
    for sid in sorted(model.states):
        s = model.states[sid]
        f = _dot_quantity(s.termination_count / s.size) if s.size > 0 else "?"
        lines.append(
            f'  q{sid} [label="q{sid}\\nn={s.size} F={f}", fillcolor={_FILL[s.color]}];'
        )
    for sid in sorted(model.states):
        s = model.states[sid]
        for a in sorted(s.outgoing):
            e = s.outgoing[a]
            p = _dot_quantity(e.count / s.size) if s.size > 0 else "?"
            lines.append(f'  q{sid} -> q{e.target.id} [label="{a} {p}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def structural_snapshot(model: Pdfa) -> dict:
    """Deep copy of all semantic state for equality checks. Versions and
    bookkeeping clocks are excluded on purpose: undo restores data, not
    cache-invalidation counters."""
    snap = {}
    for sid, s in model.states.items():
        snap[sid] = {
            "color": s.color,
            "size": s.size,
            "term": s.termination_count,
            "edges": {a: (e.target.id, e.count) for a, e in s.outgoing.items()},
            "parent": s.parent.id if s.parent is not None else None,
            "in_symbol": s.in_symbol,
            "sketches": s.sketches.copy() if s.sketches is not None else None,
        }
    return {"root": model.root, "alphabet": model.alphabet_size, "states": snap}


def snapshots_equal(a: dict, b: dict) -> bool:
    if a["root"] != b["root"] or a["alphabet"] != b["alphabet"]:
        return False
    if a["states"].keys() != b["states"].keys():
        return False
    for sid, sa in a["states"].items():
        sb = b["states"][sid]
        for key in ("color", "size", "term", "edges", "parent", "in_symbol"):
            if sa[key] != sb[key]:
                return False
        ska, skb = sa["sketches"], sb["sketches"]
        if (ska is None) != (skb is None):
            return False
        if ska is not None and not ska.equals(skb):
            return False
    return True
