"""Classical surrogate for the QPU: randomized greedy independent sets.

Each shot visits the nodes in a random order and adds every node that has
no selected neighbour, stopping after each addition with probability ``q``.
``q`` is calibrated on a pilot run so that the mean weight tracks the
target.  A fraction ``noise_rate`` of shots then receives one extra node
that breaks independence, mimicking blockade violations on hardware.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .samples import SamplePool
from .schedgraph import SchedGraph

CHUNK = 1024


@dataclass(frozen=True)
class SamplerConfig:
    target_weight: float
    n_meas: int
    noise_rate: float = 0.0
    rng_seed: int = 0
    pilot_size: int = 2000

    def __post_init__(self):
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")
        if self.n_meas < 1:
            raise ValueError("n_meas must be at least 1")


def _greedy_sequence(adj, order) -> list[int]:
    chosen = 0
    seq = []
    for j in order:
        if not adj[j] & chosen:
            chosen |= 1 << j
            seq.append(j)
    return seq


def _streams(seed: int, tag: int, count: int):
    """One generator per block of CHUNK shots, keyed by (seed, tag, block)."""
    blocks = (count + CHUNK - 1) // CHUNK
    for b in range(blocks):
        yield b, np.random.default_rng([int(seed) % 2**63, tag, b])


def calibrate_stop_probability(g: SchedGraph, target_weight: float, pilot_size: int = 2000,
                               rng_seed: int = 0) -> tuple[float, float]:
    """Return ``(q, greedy_mean)``.

    Uses common random numbers across candidate ``q`` so the pilot mean is
    monotone in ``q`` and plain bisection applies.
    """
    lengths, uniforms = [], []
    for b, rng in _streams(rng_seed, 1, pilot_size):
        size = min(CHUNK, pilot_size - b * CHUNK)
        orders = rng.random((size, g.n)).argsort(axis=1)
        draws = rng.random((size, g.n))
        for order, u in zip(orders.tolist(), draws):
            k = len(_greedy_sequence(g.adjacency, order))
            lengths.append(k)
            uniforms.append(u[:k])
    lengths = np.array(lengths)
    greedy_mean = float(lengths.mean())
    if target_weight >= greedy_mean:
        return 0.0, greedy_mean
    if target_weight <= 1.0:
        return 1.0, greedy_mean
    width = g.n
    u = np.ones((len(uniforms), width))
    for i, row in enumerate(uniforms):
        u[i, : len(row)] = row

    # shot weight is the first k whose stop draw u_k fires, capped by the greedy length
    def mean_weight(q):
        hit = u < q
        hit[np.arange(len(lengths)), np.minimum(lengths, width) - 1] = True
        return float((hit.argmax(axis=1) + 1).mean())

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if mean_weight(mid) > target_weight:
            lo = mid
        else:
            hi = mid
    return hi, greedy_mean


def sample_classical(g: SchedGraph, cfg: SamplerConfig) -> SamplePool:
    q, greedy_mean = calibrate_stop_probability(g, cfg.target_weight, cfg.pilot_size, cfg.rng_seed)
    adj = g.adjacency
    rows = np.zeros((cfg.n_meas, g.n), dtype=np.uint8)
    for b, rng in _streams(cfg.rng_seed, 2, cfg.n_meas):
        start = b * CHUNK
        size = min(CHUNK, cfg.n_meas - start)
        orders = rng.random((size, g.n)).argsort(axis=1).tolist()
        stops = rng.random((size, g.n))
        noisy = rng.random(size) < cfg.noise_rate
        picks = rng.random(size)
        for i in range(size):
            chosen = 0
            added = 0
            for j in orders[i]:
                if adj[j] & chosen:
                    continue
                chosen |= 1 << j
                added += 1
                if stops[i, added - 1] < q:
                    break
            if noisy[i]:
                blocked = [j for j in range(g.n) if not chosen >> j & 1 and adj[j] & chosen]
                if blocked:
                    chosen |= 1 << blocked[int(picks[i] * len(blocked))]
            row = rows[start + i]
            for j in range(g.n):
                if chosen >> j & 1:
                    row[j] = 1
    return SamplePool(rows, seed=cfg.rng_seed, schedule="classical",
                      meta={"stop_probability": q, "greedy_mean": greedy_mean})
