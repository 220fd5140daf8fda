"""Count-min sketches with a reserved termination column.

A sketch is a depth x (width + 1) matrix of 64-bit counters. Symbol stores
hash into the first `width` columns, one column per row; the last column is
reserved for sequence terminations and is never hashed into, so termination
counts are exact. Point queries return the minimum over rows and therefore
never underestimate the true count.

Per-state future distributions are kept in a SketchSet: sketch m (1-based)
holds the m-th future symbol observed after the state, or a termination when
the sequence ends sooner. The set is backed by a single contiguous int64
tensor so that merge-time add/subtract is one vectorized operation.
"""

from __future__ import annotations

import struct
from typing import Sequence

import numpy as np

from .errors import InputDataError, InvariantViolation, UsageError

_MASK64 = (1 << 64) - 1
_INT64_MAX = (1 << 63) - 1

SNAPSHOT_MAGIC = b"CMS1"
_SNAPSHOT_HEADER = struct.Struct("<4sIIQ")  # magic, width, depth, seed


def _splitmix64(x: int) -> int:
    """One round of the splitmix64 avalanche; full 64-bit mixing."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class CmsConfig:
    """Hashing geometry shared by compatible sketches.

    Two configs with equal (width, depth, seed) hash identically; sketches
    may only be added or subtracted when their configs are equal. Column
    lookups are cached per symbol since alphabets are small and stores are
    the hot path.
    """

    __slots__ = ("width", "depth", "seed", "_row_seeds", "_flat_cache")

    def __init__(self, width: int = 128, depth: int = 4, seed: int = 1):
        if width < 2:
            raise UsageError(f"cms width must be >= 2, got {width}")
        if depth < 1:
            raise UsageError(f"cms depth must be >= 1, got {depth}")
        self.width = width
        self.depth = depth
        self.seed = seed & _MASK64
        x = self.seed
        seeds = []
        for _ in range(depth):
            x = _splitmix64(x)
            seeds.append(x)
        self._row_seeds = tuple(seeds)
        self._flat_cache: dict[int, np.ndarray] = {}

    def __eq__(self, other) -> bool:
        if not isinstance(other, CmsConfig):
            return NotImplemented
        return (self.width, self.depth, self.seed) == (other.width, other.depth, other.seed)

    def __hash__(self) -> int:
        return hash((self.width, self.depth, self.seed))

    def __repr__(self) -> str:
        return f"CmsConfig(width={self.width}, depth={self.depth}, seed={self.seed})"

    def columns(self, element: int) -> tuple[int, ...]:
        """Hashed column of `element` in each row, all < width."""
        e = element & _MASK64
        return tuple(_splitmix64(s ^ e) % self.width for s in self._row_seeds)

    def flat_indices(self, element: int) -> np.ndarray:
        """Row-major flat indices of `element`, cached per symbol."""
        idx = self._flat_cache.get(element)
        if idx is None:
            stride = self.width + 1
            idx = np.array(
                [r * stride + c for r, c in enumerate(self.columns(element))],
                dtype=np.intp,
            )
            self._flat_cache[element] = idx
        return idx


class CountMinSketch:
    """One count-min sketch over a CmsConfig.

    `counts` may be a view into a SketchSet tensor; all mutation goes through
    the flat view so views and standalone sketches behave identically.
    """

    __slots__ = ("config", "counts", "total", "_flat")

    def __init__(self, config: CmsConfig, counts: np.ndarray | None = None, total: int = 0):
        self.config = config
        if counts is None:
            counts = np.zeros((config.depth, config.width + 1), dtype=np.int64)
        if counts.shape != (config.depth, config.width + 1):
            raise UsageError(
                f"counts shape {counts.shape} does not match config "
                f"({config.depth}, {config.width + 1})"
            )
        self.counts = counts
        self._flat = counts.reshape(-1)
        self.total = total

    def store(self, element: int) -> None:
        self._flat[self.config.flat_indices(element)] += 1
        self.total += 1

    def store_termination(self) -> None:
        # reserved last column, incremented in every row: exact by construction
        self.counts[:, -1] += 1
        self.total += 1

    def query(self, element: int) -> int:
        """Estimated count of `element`; never below the true count."""
        return int(self._flat[self.config.flat_indices(element)].min())

    def query_termination(self) -> int:
        return int(self.counts[:, -1].min())

    def row(self, r: int) -> np.ndarray:
        """Read-only view of row r, termination column included."""
        if not 0 <= r < self.config.depth:
            raise UsageError(f"row {r} out of range for depth {self.config.depth}")
        v = self.counts[r].view()
        v.flags.writeable = False
        return v

    def _check_compatible(self, other: "CountMinSketch") -> None:
        if self.config != other.config:
            raise UsageError("sketch configs differ; refusing to combine")

    def add(self, other: "CountMinSketch") -> None:
        """Exact cell-wise merge. Counter overflow is fatal."""
        self._check_compatible(other)
        if self.total + other.total > _INT64_MAX:
            raise InvariantViolation("sketch counter overflow on add")
        self.counts += other.counts
        if self._flat.min() < 0:
            raise InvariantViolation("sketch counter overflow on add")
        self.total += other.total

    def subtract(self, other: "CountMinSketch") -> None:
        """Exact cell-wise removal; going negative means undo ran out of order."""
        self._check_compatible(other)
        if np.any(other.counts > self.counts):
            raise InvariantViolation("sketch subtraction would go negative (out-of-order undo?)")
        self.counts -= other.counts
        self.total -= other.total

    def copy(self) -> "CountMinSketch":
        return CountMinSketch(self.config, self.counts.copy(), self.total)

    def equals(self, other: "CountMinSketch") -> bool:
        return (
            self.config == other.config
            and self.total == other.total
            and np.array_equal(self.counts, other.counts)
        )

    def to_bytes(self) -> bytes:
        header = _SNAPSHOT_HEADER.pack(
            SNAPSHOT_MAGIC, self.config.width, self.config.depth, self.config.seed
        )
        return header + self.counts.astype("<i8", copy=False).tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CountMinSketch":
        if len(blob) < _SNAPSHOT_HEADER.size:
            raise InputDataError("sketch snapshot truncated")
        magic, width, depth, seed = _SNAPSHOT_HEADER.unpack_from(blob, 0)
        if magic != SNAPSHOT_MAGIC:
            raise InputDataError(f"bad sketch snapshot magic {magic!r}")
        config = CmsConfig(width=width, depth=depth, seed=seed)
        body = blob[_SNAPSHOT_HEADER.size:]
        expected = depth * (width + 1) * 8
        if len(body) != expected:
            raise InputDataError(
                f"sketch snapshot body is {len(body)} bytes, expected {expected}"
            )
        counts = np.frombuffer(body, dtype="<i8").reshape(depth, width + 1).astype(np.int64)
        if counts.min() < 0:
            raise InputDataError("sketch snapshot contains negative counters")
        sums = counts.sum(axis=1)
        if not np.all(sums == sums[0]):
            raise InputDataError("sketch snapshot rows disagree on total mass")
        return cls(config, counts, int(sums[0]))


class SketchSet:
    """The n_futures per-state sketches, one contiguous tensor underneath.

    per_future[m - 1] is the sketch for the m-th future symbol. Totals stay
    equal across sketches because every recorded pass stores exactly one
    element (symbol or termination) into each.
    """

    __slots__ = ("config", "n_futures", "tensor", "per_future")

    def __init__(self, config: CmsConfig, n_futures: int, tensor: np.ndarray | None = None):
        if n_futures < 1:
            raise UsageError(f"n_futures must be >= 1, got {n_futures}")
        self.config = config
        self.n_futures = n_futures
        if tensor is None:
            tensor = np.zeros((n_futures, config.depth, config.width + 1), dtype=np.int64)
        if tensor.shape != (n_futures, config.depth, config.width + 1):
            raise UsageError("sketch tensor shape does not match config")
        self.tensor = tensor
        # each per-future sketch is a view into the tensor, not a copy
        self.per_future = [CountMinSketch(config, counts=tensor[m]) for m in range(n_futures)]

    def record_futures(self, seq: Sequence[int], start: int = 0) -> None:
        """Record the future seq[start:]: sketch m takes seq[start + m - 1],
        or a termination when the sequence ends sooner."""
        remaining = len(seq) - start
        for i, sk in enumerate(self.per_future):
            if remaining > i:
                sk.store(seq[start + i])
            else:
                sk.store_termination()

    def _check_compatible(self, other: "SketchSet") -> None:
        if self.config != other.config or self.n_futures != other.n_futures:
            raise UsageError("sketch sets differ in config or n_futures")

    def add(self, other: "SketchSet") -> None:
        self._check_compatible(other)
        self.tensor += other.tensor
        if self.tensor.min() < 0:
            raise InvariantViolation("sketch counter overflow on add")
        for sk, osk in zip(self.per_future, other.per_future):
            sk.total += osk.total

    def subtract(self, other: "SketchSet") -> None:
        self._check_compatible(other)
        if np.any(other.tensor > self.tensor):
            raise InvariantViolation("sketch subtraction would go negative (out-of-order undo?)")
        self.tensor -= other.tensor
        for sk, osk in zip(self.per_future, other.per_future):
            sk.total -= osk.total

    def totals(self) -> list[int]:
        return [sk.total for sk in self.per_future]

    def copy(self) -> "SketchSet":
        dup = SketchSet(self.config, self.n_futures, self.tensor.copy())
        for sk, osk in zip(dup.per_future, self.per_future):
            sk.total = osk.total
        return dup

    def equals(self, other: "SketchSet") -> bool:
        return (
            self.config == other.config
            and self.n_futures == other.n_futures
            and self.totals() == other.totals()
            and np.array_equal(self.tensor, other.tensor)
        )

    def nbytes(self) -> int:
        return self.n_futures * self.config.depth * (self.config.width + 1) * 8


def record_futures(sketches: SketchSet, future: Sequence[int]) -> None:
    """Record one observed future (the suffix after a state visit)."""
    sketches.record_futures(future, 0)
