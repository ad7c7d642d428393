"""Scheduling (conflict) graph over deliveries.

Node sets are Python ints used as bitsets: bit ``j`` set means delivery
``j`` is selected.  ``int.bit_count`` and ``&`` keep IS tests and conflict
degrees word-parallel for any ``n``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import LengthMismatch
from .instances import DdppInstance


@dataclass(frozen=True)
class SchedGraph:
    n: int
    adjacency: tuple[int, ...]
    edge_list: tuple[tuple[int, int], ...]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "SchedGraph":
        rows = [0] * n
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loops are not allowed")
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        return cls._from_rows(n, rows)

    @classmethod
    def _from_rows(cls, n, rows) -> "SchedGraph":
        edges = tuple((i, j) for i in range(n) for j in range(i + 1, n) if rows[i] >> j & 1)
        return cls(n, tuple(rows), edges)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def neighbors(self, j: int) -> list[int]:
        return mask_to_ids(self.adjacency[j])

    def degree(self, j: int) -> int:
        return self.adjacency[j].bit_count()

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i] >> j & 1)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edge_list:
            a[i, j] = a[j, i] = True
        return a

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = frontier = 1
        while frontier:
            grown = seen
            for j in mask_to_ids(frontier):
                grown |= self.adjacency[j]
            frontier = grown & ~seen
            seen = grown
        return seen == self.full_mask

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edge_list)
        return g

    def to_dot(self) -> str:
        lines = ["graph sched {"]
        lines += [f"  {j};" for j in range(self.n)]
        lines += [f"  {i} -- {j};" for i, j in self.edge_list]
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_edge_text(self) -> str:
        return f"# n={self.n}\n" + "".join(f"{i} {j}\n" for i, j in self.edge_list)


def build_graph(inst: DdppInstance) -> SchedGraph:
    """Sweep line over departure times; touching windows get no edge."""
    n = inst.n
    rows = [0] * n
    events = sorted(range(n), key=lambda j: inst.deliveries[j].leave_ticks)
    alive: list[tuple[int, int]] = []  # heap of (return_ticks, id)
    for j in events:
        d = inst.deliveries[j]
        while alive and alive[0][0] <= d.leave_ticks:
            heapq.heappop(alive)
        for _, i in alive:
            rows[i] |= 1 << j
            rows[j] |= 1 << i
        heapq.heappush(alive, (d.return_ticks, j))
    return SchedGraph._from_rows(n, rows)


def max_overlap_depth(inst: DdppInstance) -> int:
    """Largest number of windows alive at one instant (clique number)."""
    events = []
    for d in inst.deliveries:
        events.append((d.leave_ticks, 1))
        events.append((d.return_ticks, -1))
    # returns sort before departures at equal times
    events.sort()
    depth = best = 0
    for _, step in events:
        depth += step
        best = max(best, depth)
    return best


# --------------------------------------------------------------------------
# bitstring helpers


def ids_to_mask(ids: Iterable[int]) -> int:
    m = 0
    for j in ids:
        m |= 1 << int(j)
    return m


def mask_to_ids(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def bits_to_mask(bits) -> int:
    """Accept a 0/1 sequence, a ``'0101'`` string (char j = node j) or an int mask."""
    if isinstance(bits, (int, np.integer)):
        return int(bits)
    if isinstance(bits, str):
        bits = [c == "1" for c in bits]
    m = 0
    for j, b in enumerate(bits):
        if b:
            m |= 1 << j
    return m


def mask_to_bitstring(mask: int, n: int) -> str:
    return "".join("1" if mask >> j & 1 else "0" for j in range(n))


def _checked_mask(g: SchedGraph, nodes) -> int:
    if isinstance(nodes, (int, np.integer)):
        if int(nodes) >> g.n:
            raise LengthMismatch(f"mask has bits beyond n={g.n}")
        return int(nodes)
    if len(nodes) != g.n:
        raise LengthMismatch(f"bitstring length {len(nodes)} != n={g.n}")
    return bits_to_mask(nodes)


def is_independent_set(g: SchedGraph, nodes) -> bool:
    s = _checked_mask(g, nodes)
    adj = g.adjacency
    rest = s
    while rest:
        low = rest & -rest
        j = low.bit_length() - 1
        if adj[j] & s:
            return False
        rest ^= low
    return True


def conflict_degrees(g: SchedGraph, nodes) -> list[int]:
    """Selected-neighbour count for each selected node, zero elsewhere."""
    s = _checked_mask(g, nodes)
    return [(g.adjacency[j] & s).bit_count() if s >> j & 1 else 0 for j in range(g.n)]
