"""Abbadingo-style sequence files and solution (probability) files.

Format: a header line "N A" (sequence count, alphabet size), then N lines
"len s1 ... s_len" with symbols in [0, A). Solution files carry a count line
followed by one probability per line. All parse errors report 1-based line
numbers.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, TextIO

from .errors import InputDataError, ParseError


@dataclass
class Dataset:
    alphabet_size: int
    sequences: list[list[int]]

    def __iter__(self) -> Iterator[list[int]]:
        return iter(self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass
class SolutionFile:
    probabilities: list[float]

    def __len__(self) -> int:
        return len(self.probabilities)


def _as_lines(source) -> list[str]:
    """Accept a path (str or PathLike), raw text (str containing a newline),
    or a readable file object."""
    if hasattr(source, "read"):
        return source.read().splitlines()
    if isinstance(source, os.PathLike):
        return Path(source).read_text().splitlines()
    if isinstance(source, str):
        if "\n" in source or not source.strip():
            return source.splitlines()
        return Path(source).read_text().splitlines()
    raise InputDataError(f"unsupported input source {type(source).__name__}")


def _parse_header(line: str, line_no: int) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise ParseError(line_no, f"header must be two integers, got {line.strip()!r}")
    try:
        n, a = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(line_no, f"header must be two integers, got {line.strip()!r}") from None
    if n < 0:
        raise ParseError(line_no, f"sequence count must be >= 0, got {n}")
    if a < 1:
        raise ParseError(line_no, f"alphabet size must be >= 1, got {a}")
    return n, a


def _parse_sequence(line: str, line_no: int, alphabet_size: int) -> list[int]:
    parts = line.split()
    try:
        fields = [int(p) for p in parts]
    except ValueError:
        raise ParseError(line_no, f"non-integer token in sequence line {line.strip()!r}") from None
    if not fields:
        raise ParseError(line_no, "empty sequence line")
    length, seq = fields[0], fields[1:]
    if length < 0:
        raise ParseError(line_no, f"negative sequence length {length}")
    if len(seq) != length:
        raise ParseError(line_no, f"declared length {length} but found {len(seq)} symbols")
    for s in seq:
        if not 0 <= s < alphabet_size:
            raise ParseError(line_no, f"symbol {s} outside alphabet [0, {alphabet_size})")
    return seq


def read_abbadingo(source) -> Dataset:
    """Parse a whole Abbadingo file into a Dataset."""
    lines = _as_lines(source)
    if not lines or not lines[0].strip():
        raise ParseError(1, "missing header line")
    n, a = _parse_header(lines[0], 1)
    sequences = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue  # ignore blank lines
        if len(sequences) >= n:
            raise ParseError(idx, f"more than the {n} sequences announced in the header")
        sequences.append(_parse_sequence(line, idx, a))
    if len(sequences) != n:
        raise ParseError(
            len(lines) + 1, f"header announced {n} sequences but file has {len(sequences)}"
        )
    return Dataset(alphabet_size=a, sequences=sequences)


def write_abbadingo(data: Dataset, destination) -> None:
    """Write a Dataset back out; read_abbadingo(write_abbadingo(d)) == d."""
    out = [f"{len(data.sequences)} {data.alphabet_size}"]
    for seq in data.sequences:
        out.append(" ".join([str(len(seq))] + [str(s) for s in seq]))
    text = "\n".join(out) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)


class AbbadingoStream:
    """Lazy sequence source for the stream driver: the header is read
    eagerly (alphabet_size must be known up front), sequences are parsed one
    line at a time."""

    def __init__(self, source):
        if hasattr(source, "read"):
            self._fh: TextIO = source
            self._owns = False
        else:
            self._fh = open(source, "r")
            self._owns = True
        header = self._fh.readline()
        if not header.strip():
            raise ParseError(1, "missing header line")
        self.announced, self.alphabet_size = _parse_header(header, 1)
        self._line_no = 1

    def __iter__(self) -> Iterator[list[int]]:
        produced = 0
        try:
            for line in self._fh:
                self._line_no += 1
                if not line.strip():
                    continue
                if produced >= self.announced:
                    raise ParseError(
                        self._line_no,
                        f"more than the {self.announced} sequences announced in the header",
                    )
                yield _parse_sequence(line, self._line_no, self.alphabet_size)
                produced += 1
            if produced != self.announced:
                raise ParseError(
                    self._line_no + 1,
                    f"header announced {self.announced} sequences but stream had {produced}",
                )
        finally:
            if self._owns:
                self._fh.close()


def iter_abbadingo(source) -> AbbadingoStream:
    """Streaming counterpart of read_abbadingo. Pass sys.stdin to stream
    from a pipe."""
    return AbbadingoStream(source)


def read_solution(source) -> SolutionFile:
    """Parse a solution file: a count line, then one probability in [0, 1]
    per line."""
    lines = _as_lines(source)
    if not lines or not lines[0].strip():
        raise ParseError(1, "missing count line")
    try:
        n = int(lines[0].split()[0])
    except ValueError:
        raise ParseError(1, f"count line must be an integer, got {lines[0].strip()!r}") from None
    if n < 0:
        raise ParseError(1, f"count must be >= 0, got {n}")
    probs = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if len(probs) >= n:
            raise ParseError(idx, f"more than the {n} probabilities announced")
        try:
            p = float(line.split()[0])
        except ValueError:
            raise ParseError(idx, f"non-numeric probability {line.strip()!r}") from None
        if not 0.0 <= p <= 1.0:
            raise ParseError(idx, f"probability {p} outside [0, 1]")
        probs.append(p)
    if len(probs) != n:
        raise ParseError(len(lines) + 1, f"announced {n} probabilities but found {len(probs)}")
    return SolutionFile(probabilities=probs)
