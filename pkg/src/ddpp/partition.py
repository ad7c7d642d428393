"""Set partitioning over battery-feasible schedules.

``solve_partition`` is a depth-first branch and bound over a pool of
feasible sets; ``enumerate_exact`` builds the complete feasible family for
small instances and solves it by dynamic programming over delivery subsets;
``greedy_baseline`` is the colour-then-split heuristic.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .correction import FeasiblePool
from .errors import DivisionByZeroGuard, InstanceInfeasible, PoolMissingSingletons, TooLarge
from .instances import DdppInstance
from .schedgraph import SchedGraph, mask_to_bitstring, mask_to_ids

OPTIMAL = "Optimal-over-pool"
INFEASIBLE = "Infeasible"
TIMED_OUT = "TimedOut"
HEURISTIC = "Heuristic"

DEFAULT_EXACT_CAP = 20


@dataclass
class PartitionSolution:
    n: int
    selected_sets: list[int]
    status: str
    wall_time_ms: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def drones(self) -> int:
        return len(self.selected_sets)

    def labels(self) -> list[int]:
        """Drone index for every delivery (-1 if uncovered)."""
        out = [-1] * self.n
        for k, s in enumerate(self.selected_sets):
            for j in mask_to_ids(s):
                out[j] = k
        return out

    def is_exact_cover(self) -> bool:
        union = 0
        for s in self.selected_sets:
            if union & s:
                return False
            union |= s
        return union == (1 << self.n) - 1

    def to_dict(self) -> dict:
        return {
            "drones": self.drones,
            "sets": [mask_to_ids(s) for s in self.selected_sets],
            "status": self.status,
            "wall_time_ms": round(self.wall_time_ms, 3),
        }


def save_solution(sol: PartitionSolution, path) -> None:
    Path(path).write_text(json.dumps(sol.to_dict(), indent=2) + "\n")


def load_solution(path, n: int | None = None) -> PartitionSolution:
    data = json.loads(Path(path).read_text())
    sets = [sum(1 << j for j in ids) for ids in data["sets"]]
    if n is None:
        n = max((max(ids) + 1 for ids in data["sets"] if ids), default=0)
    return PartitionSolution(n, sets, data["status"], float(data.get("wall_time_ms", 0.0)))


# --------------------------------------------------------------------------
# branch and bound


def _branch_order(n: int, sets) -> list[int]:
    return sorted(set(sets), key=lambda m: (-m.bit_count(), mask_to_bitstring(m, n)))


def solve_partition(pool: FeasiblePool, time_limit: float = 60.0, *, inst: DdppInstance | None = None,
                    node_limit: int | None = None) -> PartitionSolution:
    """Minimum exact cover of all deliveries by pool members.

    Depth-first branch and bound: branch on the lowest uncovered delivery,
    children are the pool sets containing it that avoid everything already
    covered, heaviest first (then lexicographic).  The bound adds
    ``ceil(uncovered / max_set_weight)`` to the drones used so far; with
    ``inst`` given it also uses ``ceil(uncovered_cost / B)``, valid because
    every pool set fits the battery.  Covered masks already reached with no
    more drones are not expanded again.

    ``node_limit`` caps expansions deterministically; ``time_limit`` caps
    wall time.  Hitting either returns the incumbent with status TimedOut.
    """
    t0 = time.perf_counter()
    n = pool.n
    if not pool.has_all_singletons():
        missing = [j for j in range(n) if (1 << j) not in pool]
        raise PoolMissingSingletons(f"pool lacks singletons for deliveries {missing[:10]}")
    if n == 0:
        return PartitionSolution(0, [], OPTIMAL)
    full = (1 << n) - 1
    order = _branch_order(n, pool.sets)
    by_element: list[list[int]] = [[] for _ in range(n)]
    for m in order:
        for j in mask_to_ids(m):
            by_element[j].append(m)
    max_w = max(m.bit_count() for m in order)
    if inst is not None:
        costs = inst.cost_units
        budget = inst.battery_units
        set_cost = {m: sum(costs[j] for j in mask_to_ids(m)) for m in order}
        total = sum(costs)
    else:
        budget = None
        set_cost = dict.fromkeys(order, 0)
        total = 0

    # first-child dive: the leaf DFS reaches first, so a limit never leaves us empty-handed
    dive, covered = [], 0
    while covered != full:
        rest = full & ~covered
        j = (rest & -rest).bit_length() - 1
        m = next(m for m in by_element[j] if not m & covered)
        dive.append(m)
        covered |= m
    best: list = [len(dive) + 1, dive]
    seen: dict[int, int] = {}
    state = {"expanded": 0, "stopped": False}

    def out_of_budget() -> bool:
        if node_limit is not None and state["expanded"] >= node_limit:
            return True
        return state["expanded"] % 256 == 0 and time.perf_counter() - t0 > time_limit

    def search(covered: int, cost_left: int, chosen: list[int]) -> None:
        if covered == full:
            if len(chosen) < best[0]:
                best[0], best[1] = len(chosen), list(chosen)
            return
        rest = full & ~covered
        need = -(-rest.bit_count() // max_w)
        if budget is not None:
            need = max(need, -(-cost_left // budget))
        used = len(chosen)
        if used + need >= best[0] or seen.get(covered, n + 1) <= used:
            return
        seen[covered] = used
        state["expanded"] += 1
        if out_of_budget():
            state["stopped"] = True
            return
        j = (rest & -rest).bit_length() - 1
        for m in by_element[j]:
            if m & covered:
                continue
            chosen.append(m)
            search(covered | m, cost_left - set_cost[m], chosen)
            chosen.pop()
            if state["stopped"]:
                return

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n + 200))
    try:
        search(0, total, [])
    finally:
        sys.setrecursionlimit(limit)
    status = TIMED_OUT if state["stopped"] else OPTIMAL
    return PartitionSolution(n, best[1], status, (time.perf_counter() - t0) * 1e3,
                             {"expanded": state["expanded"], "pool_size": len(order)})


# --------------------------------------------------------------------------
# exact oracle


def enumerate_feasible_sets(g: SchedGraph, inst: DdppInstance) -> list[int]:
    """Every non-empty independent set whose cost fits the battery."""
    adj = g.adjacency
    costs = inst.cost_units
    budget = inst.battery_units
    n = g.n
    out: list[int] = []
    above = [((1 << n) - 1) & ~((1 << (j + 1)) - 1) for j in range(n)]

    def grow(mask: int, cost: int, cand: int):
        while cand:
            low = cand & -cand
            j = low.bit_length() - 1
            cand ^= low
            c = cost + costs[j]
            if c > budget:
                continue
            m = mask | low
            out.append(m)
            grow(m, c, cand & ~adj[j] & above[j])

    grow(0, 0, (1 << n) - 1)
    return out


def enumerate_exact(g: SchedGraph, inst: DdppInstance, n_cap: int = DEFAULT_EXACT_CAP) -> tuple[FeasiblePool, int]:
    """Return the complete feasible family I_B and the optimal drone count.

    The optimum is ``d[U] = 1 + min d[U - s]`` over feasible ``s`` inside the
    uncovered set ``U`` that contain its lowest delivery and cannot be
    extended by another delivery of ``U``; ``d[0] = 0``.
    """
    if g.n > n_cap:
        raise TooLarge(f"exact enumeration is capped at n={n_cap}, got n={g.n}")
    if not inst.feasible_as_given:
        raise InstanceInfeasible("some delivery exceeds the battery on its own; no schedule exists")
    family = enumerate_feasible_sets(g, inst)
    members = set(family)
    n = g.n
    by_low: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for s in family:
        grow = 0
        for v in range(n):
            bit = 1 << v
            if not s & bit and (s | bit) in members:
                grow |= bit
        by_low[(s & -s).bit_length() - 1].append((s, grow))

    @lru_cache(maxsize=None)
    def d(rest: int) -> int:
        if not rest:
            return 0
        j = (rest & -rest).bit_length() - 1
        best = math.inf
        for s, grow in by_low[j]:
            if s & ~rest or grow & rest:
                continue
            best = min(best, 1 + d(rest & ~s))
        return best

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * n + 100))
    try:
        d_exact = d((1 << n) - 1) if n else 0
    finally:
        sys.setrecursionlimit(limit)
    pool = FeasiblePool(n, sorted(family, key=lambda m: (-m.bit_count(), mask_to_bitstring(m, n))))
    return pool, int(d_exact)


# --------------------------------------------------------------------------
# heuristic baseline


def greedy_baseline(g: SchedGraph, inst: DdppInstance) -> PartitionSolution:
    """First-fit colouring by departure time, then split classes over budget.

    A class over budget sheds its most expensive delivery (lowest id on ties)
    into a fresh class until it fits; fresh classes are checked the same way.
    """
    t0 = time.perf_counter()
    order = sorted(range(inst.n), key=lambda j: (inst.deliveries[j].leave_ticks, j))
    classes: list[list[int]] = []
    ends: list[int] = []
    for j in order:
        d = inst.deliveries[j]
        for c, end in enumerate(ends):
            if end <= d.leave_ticks:
                classes[c].append(j)
                ends[c] = d.return_ticks
                break
        else:
            classes.append([j])
            ends.append(d.return_ticks)
    colours = len(classes)
    costs = inst.cost_units
    queue = [list(c) for c in classes]
    done: list[list[int]] = []
    splits = 0
    while queue:
        members = queue.pop(0)
        spill: list[int] = []
        while sum(costs[j] for j in members) > inst.battery_units and len(members) > 1:
            victim = min(members, key=lambda j: (-costs[j], j))
            members.remove(victim)
            spill.append(victim)
        done.append(members)
        if spill:
            splits += 1
            queue.append(sorted(spill))
    sets = [sum(1 << j for j in c) for c in done]
    return PartitionSolution(inst.n, sets, HEURISTIC, (time.perf_counter() - t0) * 1e3,
                             {"colours": colours, "splits": splits})


# --------------------------------------------------------------------------
# metrics


def metrics(d: int, d_exact: int) -> tuple[Fraction, int]:
    """Approximation ratio and additive gap against the exact drone count."""
    if d_exact == 0:
        raise DivisionByZeroGuard("exact drone count is zero")
    return Fraction(d, d_exact), d - d_exact


def lower_bound(inst: DdppInstance) -> int:
    """max(overlap depth, ceil(total cost / battery)); needs no enumeration."""
    from .schedgraph import max_overlap_depth

    total = sum(inst.cost_units)
    return max(max_overlap_depth(inst), -(-total // inst.battery_units))
