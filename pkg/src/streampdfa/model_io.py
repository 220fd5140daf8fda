"""Versioned binary container for frozen models (and sketches, if carried).

Layout, all little-endian:

    magic      8 bytes  b"PFA1\\x00\\x00\\x00\\x01"
    header     alphabet_size u32, root u64, flags u8 (bit0 frozen,
               bit1 has_sketches), metadata block length u32
    metadata   entry count u32, then per entry sorted by key:
               key length u32, key utf-8, value length u32, value utf-8
               (length-prefixed so keys and values are arbitrary text)
    sketches   n_futures u32, width u32, depth u32, seed u64 (only when
               flagged)
    states     count u64, then per state sorted by id:
                 id u64, color u8, size u64, termination u64,
                 parent i64 (-1 none), in_symbol i32 (-1 none),
                 edge count u32, edges sorted by symbol:
                   symbol u32, target u64, count u64
                 sketch tensor raw u64 cells (only when flagged)

Sketch totals are not stored: they are recomputed on load and the equal
row-sum property doubles as an integrity check. Sorted ids and symbols make
the encoding byte-deterministic.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .automaton import Edge, Pdfa, State, StateColor
from .cms import CmsConfig, SketchSet
from .errors import InputDataError

MAGIC = b"PFA1\x00\x00\x00\x01"

_HEADER = struct.Struct("<IQBI")
_SKETCH_HEADER = struct.Struct("<IIIQ")
_STATE_HEAD = struct.Struct("<QBQQqiI")
_EDGE = struct.Struct("<IQQ")
_COUNT = struct.Struct("<Q")
_COUNT32 = struct.Struct("<I")

_FLAG_FROZEN = 1
_FLAG_SKETCHES = 2


def _encode_metadata(metadata: dict[str, str]) -> bytes:
    chunks = [_COUNT32.pack(len(metadata))]
    for key, value in sorted(metadata.items()):
        for text in (key, value):
            raw = str(text).encode("utf-8")
            chunks.append(_COUNT32.pack(len(raw)))
            chunks.append(raw)
    return b"".join(chunks)


def _decode_metadata(block: bytes) -> dict[str, str]:
    rd = _Reader(block)
    try:
        (count,) = rd.take(_COUNT32)
        metadata = {}
        for _ in range(count):
            (klen,) = rd.take(_COUNT32)
            key = rd.take_raw(klen).decode("utf-8")
            (vlen,) = rd.take(_COUNT32)
            metadata[key] = rd.take_raw(vlen).decode("utf-8")
    except (InputDataError, UnicodeDecodeError):
        raise InputDataError("model metadata block malformed") from None
    if rd.pos != len(block):
        raise InputDataError("model metadata block malformed")
    return metadata


def model_to_bytes(model: Pdfa, metadata: dict[str, str] | None = None) -> bytes:
    meta_blob = _encode_metadata(metadata or {})
    has_sketches = model.sketch_config is not None
    flags = (_FLAG_FROZEN if model.frozen else 0) | (_FLAG_SKETCHES if has_sketches else 0)
    parts = [MAGIC, _HEADER.pack(model.alphabet_size, model.root, flags, len(meta_blob)), meta_blob]
    if has_sketches:
        cfg = model.sketch_config
        parts.append(_SKETCH_HEADER.pack(model.n_futures, cfg.width, cfg.depth, cfg.seed))
    parts.append(_COUNT.pack(len(model.states)))
    for sid in sorted(model.states):
        s = model.states[sid]
        parts.append(_STATE_HEAD.pack(
            s.id, int(s.color), s.size, s.termination_count,
            s.parent.id if s.parent is not None else -1,
            s.in_symbol if s.in_symbol is not None else -1,
            len(s.outgoing),
        ))
        for a in sorted(s.outgoing):
            e = s.outgoing[a]
            parts.append(_EDGE.pack(a, e.target.id, e.count))
        if has_sketches:
            parts.append(s.sketches.tensor.astype("<i8", copy=False).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: struct.Struct):
        if self.pos + fmt.size > len(self.blob):
            raise InputDataError("model file truncated")
        vals = fmt.unpack_from(self.blob, self.pos)
        self.pos += fmt.size
        return vals

    def take_raw(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise InputDataError("model file truncated")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out


def model_from_bytes(blob: bytes) -> tuple[Pdfa, dict[str, str]]:
    if blob[:len(MAGIC)] != MAGIC:
        raise InputDataError("not a model file (bad magic)")
    rd = _Reader(blob)
    rd.pos = len(MAGIC)
    alphabet_size, root, flags, meta_len = rd.take(_HEADER)
    metadata = _decode_metadata(rd.take_raw(meta_len))
    has_sketches = bool(flags & _FLAG_SKETCHES)
    cfg = None
    n_futures = 0
    if has_sketches:
        n_futures, width, depth, seed = rd.take(_SKETCH_HEADER)
        cfg = CmsConfig(width=width, depth=depth, seed=seed)
    (n_states,) = rd.take(_COUNT)

    model = Pdfa(alphabet_size, sketch_config=cfg, n_futures=n_futures)
    model.states.clear()  # replace the fresh root with the stored states
    tensor_cells = n_futures * cfg.depth * (cfg.width + 1) if has_sketches else 0
    raw_states = []
    for _ in range(n_states):
        sid, color, size, term, parent_id, in_symbol, n_edges = rd.take(_STATE_HEAD)
        try:
            col = StateColor(color)
        except ValueError:
            raise InputDataError(f"state q{sid} has unknown color {color}") from None
        edges = [rd.take(_EDGE) for _ in range(n_edges)]
        sketches = None
        if has_sketches:
            raw = rd.take_raw(tensor_cells * 8)
            tensor = (
                np.frombuffer(raw, dtype="<i8")
                .reshape(n_futures, cfg.depth, cfg.width + 1)
                .astype(np.int64)
            )
            if tensor.min() < 0:
                raise InputDataError(f"state q{sid} has negative sketch counters")
            sums = tensor.sum(axis=2)
            if not np.all(sums == sums[:, :1]):
                raise InputDataError(f"state q{sid} sketch rows disagree on total mass")
            sketches = SketchSet(cfg, n_futures, tensor)
            for m, sk in enumerate(sketches.per_future):
                sk.total = int(sums[m, 0])
        s = State(sid, col, sketches=sketches)
        s.size = size
        s.termination_count = term
        model.states[sid] = s
        raw_states.append((s, parent_id, in_symbol, edges))
    if rd.pos != len(blob):
        raise InputDataError("trailing bytes after model payload")

    for s, parent_id, in_symbol, edges in raw_states:
        if parent_id >= 0:
            parent = model.states.get(parent_id)
            if parent is None:
                raise InputDataError(f"state q{s.id} references missing parent q{parent_id}")
            s.parent = parent
            s.in_symbol = in_symbol
        for symbol, target_id, count in edges:
            target = model.states.get(target_id)
            if target is None:
                raise InputDataError(f"state q{s.id} edge to missing state q{target_id}")
            s.outgoing[symbol] = Edge(target, count)

    if root not in model.states:
        raise InputDataError(f"root q{root} is not among the stored states")
    model.root = root
    model.frozen = bool(flags & _FLAG_FROZEN)
    model._next_id = max(model.states) + 1
    model.peak_states = len(model.states)
    return model, metadata


def save_model(model: Pdfa, path, metadata: dict[str, str] | None = None) -> None:
    Path(path).write_bytes(model_to_bytes(model, metadata))


def load_model(path) -> tuple[Pdfa, dict[str, str]]:
    return model_from_bytes(Path(path).read_bytes())
