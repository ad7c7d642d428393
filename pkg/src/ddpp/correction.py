"""Greedy repair of raw bitstrings into battery-feasible schedules.

Stage one removes conflicting nodes until the set is independent; stage two
drops the most expensive deliveries until the battery budget holds.  Both
stages only ever remove nodes.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instances import DdppInstance
from .samples import SamplePool
from .schedgraph import SchedGraph, is_independent_set, mask_to_bitstring, mask_to_ids


@dataclass
class FeasiblePool:
    n: int
    sets: list[int]
    origin_counts: dict[int, int] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self._members = frozenset(self.sets)

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, mask: int) -> bool:
        return mask in self._members

    def has_all_singletons(self) -> bool:
        return all((1 << j) in self for j in range(self.n))

    def bitstrings(self) -> list[str]:
        return [mask_to_bitstring(m, self.n) for m in self.sets]

    def weights(self) -> list[int]:
        return [m.bit_count() for m in self.sets]

    def as_sample_pool(self) -> SamplePool:
        return SamplePool.from_masks(self.sets, self.n)


def _set_cost(costs: list[int], mask: int) -> int:
    return sum(costs[j] for j in mask_to_ids(mask))


def enforce_is(g: SchedGraph, inst: DdppInstance, s: int, rng=None, *, stats: Counter | None = None) -> int:
    """Remove max-conflict nodes until ``s`` is independent.

    ``rng`` may be a Generator or a zero-argument factory returning one; it is
    only consulted when a uniform pick among tied nodes is needed.
    """
    adj = g.adjacency
    costs = inst.cost_units
    budget = inst.battery_units
    gen = None
    while True:
        degrees = {j: (adj[j] & s).bit_count() for j in mask_to_ids(s)}
        top = max(degrees.values(), default=0)
        if top == 0:
            return s
        tied = [j for j, d in degrees.items() if d == top]
        if _set_cost(costs, s) > budget:
            # highest cost first, lowest id among equal costs
            victim = min(tied, key=lambda j: (-costs[j], j))
        elif len(tied) == 1:
            victim = tied[0]
        else:
            if gen is None:
                gen = rng() if callable(rng) else (rng if rng is not None else np.random.default_rng())
            victim = tied[int(gen.integers(len(tied)))]
        s &= ~(1 << victim)
        if stats is not None:
            stats["is_removals"] += 1


def enforce_budget(inst: DdppInstance, s: int, *, stats: Counter | None = None) -> int:
    costs = inst.cost_units
    total = _set_cost(costs, s)
    while total > inst.battery_units:
        victim = min(mask_to_ids(s), key=lambda j: (-costs[j], j))
        s &= ~(1 << victim)
        total -= costs[victim]
        if stats is not None:
            stats["budget_removals"] += 1
    return s


def correct(g: SchedGraph, inst: DdppInstance, s: int, rng=None) -> int:
    return enforce_budget(inst, enforce_is(g, inst, s, rng))


def build_pool(g: SchedGraph, inst: DdppInstance, raw: SamplePool | None, rng_seed: int = 0) -> FeasiblePool:
    """Correct every raw shot, deduplicate, and add all singletons.

    Shot ``i`` draws its tie-breaks from the generator seeded by
    ``(rng_seed, i)``, so results do not depend on processing order.
    """
    n = g.n
    if raw is not None and raw.n_meas and raw.n != n:
        raise ValueError(f"pool width {raw.n} != graph size {n}")
    stats = Counter()
    counts: Counter = Counter()
    masks = raw.masks() if raw is not None else []
    seed = int(rng_seed) % 2**63
    for i, m in enumerate(masks):
        stats["raw"] += 1
        if is_independent_set(g, m):
            stats["raw_valid_is"] += 1
        fixed = enforce_is(g, inst, m, lambda i=i: np.random.default_rng([seed, i]), stats=stats)
        if fixed != m:
            stats["is_corrected"] += 1
        final = enforce_budget(inst, fixed, stats=stats)
        if final != fixed:
            stats["budget_corrected"] += 1
        if final:
            counts[final] += 1
        else:
            stats["emptied"] += 1
    members = set(counts) | {1 << j for j in range(n)}
    sets = sorted(members, key=lambda m: (-m.bit_count(), mask_to_bitstring(m, n)))
    return FeasiblePool(n, sets, dict(counts), {k: int(v) for k, v in stats.items()})


def pool_is_feasible(g: SchedGraph, inst: DdppInstance, pool: FeasiblePool) -> bool:
    costs = inst.cost_units
    return all(is_independent_set(g, m) and _set_cost(costs, m) <= inst.battery_units for m in pool.sets)


def save_feasible_pool(pool: FeasiblePool, path) -> None:
    """Bitstring-per-line file plus ``<path>.json`` with multiplicities and stats."""
    path = Path(path)
    lines = [f"# n={pool.n} n_meas={len(pool.sets)} seed=- schedule=feasible"]
    lines += pool.bitstrings()
    path.write_text("\n".join(lines) + "\n")
    side = {
        "version": 1,
        "n": pool.n,
        "multiplicities": {mask_to_bitstring(m, pool.n): c for m, c in pool.origin_counts.items()},
        "stats": pool.stats,
    }
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def load_feasible_pool(path) -> FeasiblePool:
    from .samples import load_pool

    path = Path(path)
    raw = load_pool(path)
    sets = list(dict.fromkeys(raw.masks()))
    counts, stats = {}, {}
    side = Path(str(path) + ".json")
    if side.exists():
        data = json.loads(side.read_text())
        counts = {int(s[::-1], 2): int(c) for s, c in data.get("multiplicities", {}).items()}
        stats = data.get("stats", {})
    return FeasiblePool(raw.n, sets, counts, stats)
