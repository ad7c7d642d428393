"""Piecewise rise / sweep / fall pulse schedules and detuning tuning.

Times are in nanoseconds, drive amplitudes in rad/us.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import EmptyGrid, InvalidDuration

TWO_PI = 2 * math.pi

DEFAULT_DELTA_FACTORS = (-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5)
DEFAULT_DURATIONS_NS = (300.0, 450.0, 600.0, 1000.0, 2000.0)


@dataclass(frozen=True)
class PulseSchedule:
    total_time: float
    omega_max: float
    delta_max: float

    @property
    def delta_min(self) -> float:
        return -3.0 * self.omega_max

    @property
    def t_rise(self) -> float:
        return self.total_time / 9

    @property
    def t_sweep(self) -> float:
        return 2 * self.total_time / 3

    @property
    def t_fall(self) -> float:
        # remainder keeps the three segments summing to total_time exactly
        return self.total_time - self.t_rise - self.t_sweep

    def breakpoints(self) -> tuple[float, ...]:
        t1 = self.t_rise
        return (0.0, t1, t1 + self.t_sweep, self.total_time)

    def omega(self, t: float) -> float:
        _, t1, t2, T = self.breakpoints()
        if t <= 0 or t >= T:
            return 0.0
        if t < t1:
            return self.omega_max * t / t1
        if t <= t2:
            return self.omega_max
        return self.omega_max * (T - t) / (T - t2)

    def delta(self, t: float) -> float:
        _, t1, t2, _ = self.breakpoints()
        if t <= t1:
            return self.delta_min
        if t >= t2:
            return self.delta_max
        frac = (t - t1) / (t2 - t1)
        return self.delta_min + frac * (self.delta_max - self.delta_min)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def to_csv(self, step: float = 1.0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t_ns", "omega", "delta"])
        steps = int(math.floor(self.total_time / step + 1e-9))
        for k in range(steps + 1):
            t = k * step
            w.writerow([f"{t:.6g}", repr(self.omega(t)), repr(self.delta(t))])
        if steps * step < self.total_time:
            T = self.total_time
            w.writerow([f"{T:.6g}", repr(self.omega(T)), repr(self.delta(T))])
        return buf.getvalue()


@dataclass(frozen=True)
class ConstantPulse:
    """Flat drive, handy for Rabi-type checks of the emulator."""

    total_time: float
    omega_value: float
    delta_value: float = 0.0

    @property
    def omega_max(self) -> float:
        return self.omega_value

    def breakpoints(self) -> tuple[float, ...]:
        return (0.0, self.total_time)

    def omega(self, t: float) -> float:
        return self.omega_value

    def delta(self, t: float) -> float:
        return self.delta_value

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def make_schedule(T: float, omega_max: float, delta_max: float, *, min_duration: float = 0.0) -> PulseSchedule:
    if not T > 0 or T < min_duration:
        raise InvalidDuration(f"pulse duration {T} ns must be positive and >= {min_duration} ns")
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    return PulseSchedule(float(T), float(omega_max), float(delta_max))


def default_grid(omega_max: float) -> list[tuple[float, float]]:
    return [(f * omega_max, T) for f in DEFAULT_DELTA_FACTORS for T in DEFAULT_DURATIONS_NS]


def tune_delta_max(target_weight: float, evaluate: Callable[[float, float], float],
                   grid: Iterable[Sequence[float]]) -> tuple[float, float]:
    """Pick the ``(delta_max, T)`` whose pilot mean weight lands nearest ``target_weight``.

    Ties prefer a mean at or below the target, then the shorter pulse.
    """
    grid = [(float(d), float(T)) for d, T in grid]
    if not grid:
        raise EmptyGrid("tuning grid is empty")
    best = None
    for delta_max, T in grid:
        w = evaluate(delta_max, T)
        gap = abs(w - target_weight)
        key = (round(gap, 9), 0 if w <= target_weight else 1, T)
        if best is None or key < best[0]:
            best = (key, (delta_max, T))
    return best[1]


def save_schedule(schedule: PulseSchedule, path) -> None:
    Path(path).write_text(json.dumps({"version": 1, **asdict(schedule)}, indent=2) + "\n")


def load_schedule(path) -> PulseSchedule:
    data = json.loads(Path(path).read_text())
    return make_schedule(data["total_time"], data["omega_max"], data["delta_max"])
