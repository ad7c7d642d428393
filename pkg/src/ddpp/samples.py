"""Measured bitstring pools and their text file format.

Rows of ``SamplePool.bits`` are shots; column ``j`` is atom / delivery ``j``.
On disk each shot is one line whose first character is atom 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyPool, LengthMismatch, ParseError

HEADER_PREFIX = "#"


@dataclass
class SamplePool:
    bits: np.ndarray
    seed: int | None = None
    schedule: str = "-"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 2:
            raise ValueError("sample bits must be a 2D array (shots x atoms)")

    @classmethod
    def from_bitstrings(cls, strings, n: int | None = None, **kw) -> "SamplePool":
        strings = list(strings)
        if n is None:
            if not strings:
                raise ValueError("n is required for an empty pool")
            n = len(strings[0])
        rows = np.zeros((len(strings), n), dtype=np.uint8)
        for i, s in enumerate(strings):
            if len(s) != n:
                raise LengthMismatch(f"bitstring {i} has length {len(s)}, expected {n}")
            rows[i] = [c == "1" for c in s]
        return cls(rows, **kw)

    @classmethod
    def from_masks(cls, masks, n: int, **kw) -> "SamplePool":
        masks = [int(m) for m in masks]
        rows = np.array([[(m >> j) & 1 for j in range(n)] for m in masks], dtype=np.uint8).reshape(-1, n)
        return cls(rows, **kw)

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    @property
    def n_meas(self) -> int:
        return self.bits.shape[0]

    def __len__(self) -> int:
        return self.n_meas

    def weights(self) -> np.ndarray:
        return self.bits.sum(axis=1)

    def masks(self) -> list[int]:
        place = [1 << j for j in range(self.n)]
        return [sum(p for p, b in zip(place, row) if b) for row in self.bits.tolist()]

    def bitstrings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.bits.tolist()]

    def head(self, k: int) -> "SamplePool":
        return SamplePool(self.bits[:k], self.seed, self.schedule, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, SamplePool):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and self.seed == other.seed and self.schedule == other.schedule


def mean_hamming_weight(pool: SamplePool) -> float:
    if pool.n_meas == 0:
        raise EmptyPool("cannot average an empty pool")
    return float(pool.bits.sum()) / pool.n_meas


def save_pool(pool: SamplePool, path) -> None:
    seed = "-" if pool.seed is None else str(pool.seed)
    lines = [f"{HEADER_PREFIX} n={pool.n} n_meas={pool.n_meas} seed={seed} schedule={pool.schedule}"]
    lines += pool.bitstrings()
    Path(path).write_text("\n".join(lines) + "\n")


def load_pool(path, n: int | None = None) -> SamplePool:
    """Read a pool file; the header is optional for externally produced samples."""
    header = {}
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(HEADER_PREFIX):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                header[key] = val
            continue
        if set(line) - {"0", "1"}:
            raise ParseError(f"{path}: line {lineno}: not a bitstring: {line!r}")
        rows.append((lineno, line))
    width = int(header["n"]) if "n" in header else (len(rows[0][1]) if rows else n)
    if n is not None and width != n:
        raise LengthMismatch(f"{path}: pool has n={width}, expected {n}")
    if width is None:
        raise ParseError(f"{path}: empty pool without header")
    for lineno, line in rows:
        if len(line) != width:
            raise ParseError(f"{path}: line {lineno}: bitstring length {len(line)} != n={width}")
    seed = header.get("seed", "-")
    pool = SamplePool.from_bitstrings([line for _, line in rows], n=width,
                                      seed=None if seed == "-" else int(seed),
                                      schedule=header.get("schedule", "-"))
    if "n_meas" in header and int(header["n_meas"]) != pool.n_meas:
        raise ParseError(f"{path}: header n_meas={header['n_meas']} but {pool.n_meas} rows")
    return pool
