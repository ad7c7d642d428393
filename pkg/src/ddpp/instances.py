"""DDPP instance model, random generator and JSON serialization.

Times are stored as integer ticks (1 tick = 1/1000 minute) and costs as
integer units (1 unit = 1e-6 battery-minute) so that overlap tests and
budget checks are exact.  Float views in minutes are exposed as properties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GenerationExhausted, ParseError, SchemaVersionMismatch

TICKS_PER_MINUTE = 1000
COST_UNITS_PER_MINUTE = 10**6
SCHEMA_VERSION = 1

MIN_WINDOW = 5  # minutes
MAX_WINDOW = 15
SPAN_PER_DELIVERY = 7
MAX_OVERLAPS = 5
WEIGHT_CAP = 0.3
WEIGHT_EPS = 1e-3
MAX_ATTEMPTS = 10_000


def to_ticks(minutes) -> int:
    return _to_fixed(minutes, TICKS_PER_MINUTE, "time")


def to_cost_units(value) -> int:
    return _to_fixed(value, COST_UNITS_PER_MINUTE, "cost")


def _to_fixed(value, scale: int, what: str) -> int:
    try:
        d = Decimal(str(value)) * scale
    except InvalidOperation as exc:
        raise ParseError(f"invalid {what} value {value!r}") from exc
    if d != d.to_integral_value():
        raise ParseError(f"{what} value {value!r} exceeds fixed-point resolution 1/{scale}")
    return int(d)


def _fmt_fixed(units: int, scale: int) -> str:
    digits = len(str(scale)) - 1
    return str((Decimal(units) / scale).quantize(Decimal(1).scaleb(-digits)))


@dataclass(frozen=True)
class Delivery:
    id: int
    leave_ticks: int
    return_ticks: int
    cost_units: int

    def __post_init__(self):
        if self.leave_ticks >= self.return_ticks:
            raise ValueError(f"delivery {self.id}: t_leave must precede t_return")
        if self.cost_units < 0:
            raise ValueError(f"delivery {self.id}: negative cost")

    @property
    def t_leave(self) -> float:
        return self.leave_ticks / TICKS_PER_MINUTE

    @property
    def t_return(self) -> float:
        return self.return_ticks / TICKS_PER_MINUTE

    @property
    def duration(self) -> float:
        return (self.return_ticks - self.leave_ticks) / TICKS_PER_MINUTE

    @property
    def cost(self) -> float:
        return self.cost_units / COST_UNITS_PER_MINUTE

    def overlaps(self, other: "Delivery") -> bool:
        # touching endpoints do not overlap: a drone may relaunch on return
        return self.leave_ticks < other.return_ticks and other.leave_ticks < self.return_ticks


@dataclass(frozen=True)
class DdppInstance:
    deliveries: tuple[Delivery, ...]
    battery_units: int
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "deliveries", tuple(self.deliveries))
        ids = [d.id for d in self.deliveries]
        if sorted(ids) != list(range(len(ids))) or ids != list(range(len(ids))):
            raise ValueError("delivery ids must be exactly 0..n-1 in order")
        if self.battery_units <= 0:
            raise ValueError("battery must be positive")

    @classmethod
    def from_minutes(cls, windows: Iterable[Sequence], costs: Iterable, battery, seed=None) -> "DdppInstance":
        """Build an instance from ``(t_leave, t_return)`` pairs given in minutes."""
        deliveries = [
            Delivery(j, to_ticks(lo), to_ticks(hi), to_cost_units(c))
            for j, ((lo, hi), c) in enumerate(zip(windows, costs))
        ]
        return cls(tuple(deliveries), to_cost_units(battery), seed)

    @property
    def n(self) -> int:
        return len(self.deliveries)

    @property
    def battery(self) -> float:
        return self.battery_units / COST_UNITS_PER_MINUTE

    @property
    def costs(self) -> np.ndarray:
        return np.array([d.cost for d in self.deliveries])

    @property
    def cost_units(self) -> list[int]:
        return [d.cost_units for d in self.deliveries]

    @property
    def windows(self) -> np.ndarray:
        return np.array([[d.t_leave, d.t_return] for d in self.deliveries])

    @property
    def feasible_as_given(self) -> bool:
        """False when some single delivery already exceeds the battery."""
        return all(d.cost_units <= self.battery_units for d in self.deliveries)

    def target_weight(self) -> float:
        """Relaxed mean deliveries per drone, ``B * N / sum(c)``."""
        total = sum(self.cost_units)
        return math.inf if total == 0 else self.battery_units * self.n / total

    def set_cost_units(self, mask: int) -> int:
        total = 0
        for d in self.deliveries:
            if mask >> d.id & 1:
                total += d.cost_units
        return total

    def to_dict(self) -> dict:
        out = {
            "version": SCHEMA_VERSION,
            "n": self.n,
            "battery": _fmt_fixed(self.battery_units, COST_UNITS_PER_MINUTE),
        }
        if self.seed is not None:
            out["seed"] = self.seed
        out["deliveries"] = [
            {
                "id": d.id,
                "t_leave": _fmt_fixed(d.leave_ticks, TICKS_PER_MINUTE),
                "t_return": _fmt_fixed(d.return_ticks, TICKS_PER_MINUTE),
                "cost": _fmt_fixed(d.cost_units, COST_UNITS_PER_MINUTE),
            }
            for d in self.deliveries
        ]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DdppInstance":
        if not isinstance(data, dict):
            raise ParseError("instance document must be a JSON object")
        version = data.get("version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(f"instance schema version {version!r}, expected {SCHEMA_VERSION}")
        try:
            rows = data["deliveries"]
            battery = to_cost_units(data["battery"])
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}") from exc
        seen = set()
        deliveries = []
        for pos, row in enumerate(rows):
            try:
                j = int(row["id"])
                lo = to_ticks(row["t_leave"])
                hi = to_ticks(row["t_return"])
                cost = to_cost_units(row["cost"])
            except KeyError as exc:
                raise ParseError(f"delivery entry {pos}: missing field {exc.args[0]!r}") from exc
            except (TypeError, ValueError) as exc:
                raise ParseError(f"delivery entry {pos}: {exc}") from exc
            if j in seen:
                raise ParseError(f"duplicate delivery id {j}")
            seen.add(j)
            if lo >= hi:
                raise ParseError(f"delivery {j}: t_leave {row['t_leave']} is not before t_return {row['t_return']}")
            if cost < 0:
                raise ParseError(f"delivery {j}: negative cost")
            deliveries.append(Delivery(j, lo, hi, cost))
        deliveries.sort(key=lambda d: d.id)
        if [d.id for d in deliveries] != list(range(len(deliveries))):
            raise ParseError("delivery ids must be exactly 0..n-1")
        if "n" in data and int(data["n"]) != len(deliveries):
            raise ParseError(f"field n={data['n']} disagrees with {len(deliveries)} deliveries")
        if battery <= 0:
            raise ParseError("battery must be positive")
        seed = data.get("seed")
        return cls(tuple(deliveries), battery, None if seed is None else int(seed))


def save_instance(inst: DdppInstance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n")


def load_instance(path) -> DdppInstance:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return DdppInstance.from_dict(data)


# --------------------------------------------------------------------------
# generation


def _overlap_degrees(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    adj = (lo[:, None] < hi[None, :]) & (lo[None, :] < hi[:, None])
    np.fill_diagonal(adj, False)
    return adj.sum(axis=1)


def _first_gap(lo: np.ndarray, hi: np.ndarray):
    """Return ``(gap_start, gap_end)`` of the first hole in the union, or None."""
    order = np.argsort(lo, kind="stable")
    reach = hi[order[0]]
    for j in order[1:]:
        if lo[j] >= reach:
            return int(reach), int(lo[j])
        reach = max(reach, hi[j])
    return None


def _sample_weights(rng: np.random.Generator, n: int, cost_factor: str) -> np.ndarray:
    if cost_factor == "log10":
        return 10.0 ** rng.uniform(0.0, WEIGHT_CAP, size=n)
    if cost_factor == "natural":
        return np.exp(rng.uniform(math.log(WEIGHT_EPS), math.log(WEIGHT_CAP), size=n))
    raise ValueError(f"unknown cost_factor {cost_factor!r}")


def generate_instance(n: int, battery, rng_seed: int, *, cost_factor: str = "log10",
                      max_attempts: int = MAX_ATTEMPTS) -> DdppInstance:
    """Draw a random DDPP instance.

    Window lengths are uniform on [5, 15] minutes and every window lies in
    [0, 7n].  Windows breaking the overlap cap (at most 5 neighbours) or
    leaving a hole in the time line (a disconnected conflict graph) are
    resampled; an attempt that cannot be repaired within ``50 * n`` moves is
    discarded and a fresh one is drawn.

    ``cost_factor`` selects how the per-parcel factor ``W`` is drawn:
    ``"log10"`` takes ``W = 10**u`` with ``u`` uniform on (0, 0.3), and
    ``"natural"`` takes ``W`` log-uniform on (1e-3, 0.3).  Costs are
    ``W * |I_j|``.  Deliveries are numbered by increasing departure time.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    battery_units = to_cost_units(battery)
    if battery_units <= 0:
        raise ValueError("battery must be positive")
    rng = np.random.default_rng(np.uint64(rng_seed % 2**64))
    span = SPAN_PER_DELIVERY * n * TICKS_PER_MINUTE
    # at n = 2 the span (14 min) is shorter than the longest window
    lmin, lmax = MIN_WINDOW * TICKS_PER_MINUTE, min(MAX_WINDOW * TICKS_PER_MINUTE, span)

    for _ in range(max_attempts):
        length = rng.integers(lmin, lmax, size=n, endpoint=True)
        lo = np.array([rng.integers(0, span - length[j], endpoint=True) for j in range(n)])
        if _repair(rng, lo, length, span, moves=50 * n):
            break
    else:
        raise GenerationExhausted(f"no valid window layout for n={n} after {max_attempts} attempts")

    hi = lo + length
    order = np.lexsort((hi, lo))
    weights = _sample_weights(rng, n, cost_factor)
    deliveries = []
    for new_id, j in enumerate(order):
        cost = max(1, int(round(weights[j] * length[j] * COST_UNITS_PER_MINUTE / TICKS_PER_MINUTE)))
        deliveries.append(Delivery(new_id, int(lo[j]), int(hi[j]), cost))
    return DdppInstance(tuple(deliveries), battery_units, int(rng_seed))


def _repair(rng, lo, length, span, moves) -> bool:
    """Move windows in place until caps and connectivity hold."""
    n = len(lo)
    for _ in range(moves):
        hi = lo + length
        deg = _overlap_degrees(lo, hi)
        crowded = np.flatnonzero(deg > MAX_OVERLAPS)
        if crowded.size:
            j = int(rng.choice(crowded))
            lo[j] = rng.integers(0, span - length[j], endpoint=True)
            continue
        gap = _first_gap(lo, hi)
        if gap is None:
            return True
        g0, g1 = gap
        j = int(rng.integers(n))
        # straddle the hole if the window is long enough, else shrink it
        left = max(0, g1 - int(length[j]) + 1)
        right = min(g0 - 1, span - int(length[j]))
        if left > right:
            left = max(0, g0 - int(length[j]) + 1)
            right = min(g0 - 1, span - int(length[j]))
        if left > right:
            lo[j] = rng.integers(0, span - length[j], endpoint=True)
        else:
            lo[j] = rng.integers(left, right, endpoint=True)
    return False
