"""Unit-disk embedding of a scheduling graph onto a 2D atom register.

Distances are in micrometres, drive amplitudes in rad/us and the van der
Waals coefficient ``c6`` in rad/us * um^6, so that the blockade radius is
``(c6 / omega_max) ** (1/6)`` um.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import HardwareInfeasible, LimitError, NoUdgWindowFound, ParseError, SchemaVersionMismatch
from .schedgraph import SchedGraph

# C6 for the 60S Rydberg level of 87Rb, the usual analog-device default
DEFAULT_C6 = 865723.02
WINDOW_RATIO_FLOOR = 1.0 + 1e-6
_FIT_SLACK = 1e-9
_OPEN_SIDE = 1.21


@dataclass(frozen=True)
class HardwareLimits:
    d_min: float = 5.0
    r_area: float = 35.0
    max_atoms: int = 100
    c6: float = DEFAULT_C6
    omega_max: float = 2 * math.pi
    omega_range: tuple[float, float] = (0.2 * math.pi, 4 * math.pi)

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareLimits":
        data = dict(data)
        if "omega_range" in data:
            data["omega_range"] = tuple(data["omega_range"])
        return cls(**data)

    def blockade_radius(self, omega: float) -> float:
        return (self.c6 / omega) ** (1 / 6)


@dataclass
class AtomRegister:
    positions: np.ndarray
    r_blockade: float
    omega_max: float
    c6: float = DEFAULT_C6

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)

    @classmethod
    def from_omega(cls, positions, omega_max: float, c6: float = DEFAULT_C6) -> "AtomRegister":
        return cls(positions, (c6 / omega_max) ** (1 / 6), omega_max, c6)

    @property
    def n(self) -> int:
        return len(self.positions)

    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    def interactions(self) -> np.ndarray:
        """Pairwise ``c6 / r**6`` with a zero diagonal."""
        d = self.distances()
        np.fill_diagonal(d, np.inf)
        return self.c6 / d**6

    def scaled(self, factor: float) -> "AtomRegister":
        return AtomRegister(self.positions * factor, self.r_blockade * factor, self.omega_max, self.c6)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "omega_max": self.omega_max,
            "c6": self.c6,
            "r_blockade": self.r_blockade,
            "atoms": [{"id": j, "x": float(x), "y": float(y)} for j, (x, y) in enumerate(self.positions)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AtomRegister":
        if data.get("version") != 1:
            raise SchemaVersionMismatch(f"register schema version {data.get('version')!r}, expected 1")
        try:
            atoms = sorted(data["atoms"], key=lambda a: int(a["id"]))
            if [int(a["id"]) for a in atoms] != list(range(len(atoms))):
                raise ParseError("atom ids must be exactly 0..n-1")
            pos = [(float(a["x"]), float(a["y"])) for a in atoms]
            omega = float(data["omega_max"])
            c6 = float(data.get("c6", DEFAULT_C6))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad register document: {exc}") from exc
        r_b = float(data.get("r_blockade", (c6 / omega) ** (1 / 6)))
        return cls(np.array(pos).reshape(-1, 2), r_b, omega, c6)


def save_register(reg: AtomRegister, path) -> None:
    Path(path).write_text(json.dumps(reg.to_dict(), indent=2) + "\n")


def load_register(path) -> AtomRegister:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return AtomRegister.from_dict(data)


# --------------------------------------------------------------------------
# layout


def fruchterman_reingold(g: SchedGraph, rng: np.random.Generator, *, iterations: int | None = None,
                         k: float = 1.0) -> np.ndarray:
    """Force-directed layout: repulsion k^2/d, attraction d^2/k, linear cooling."""
    n = g.n
    if iterations is None:
        iterations = int(math.ceil(50 * math.sqrt(n)))
    pos = rng.uniform(0.0, k * math.sqrt(n), size=(n, 2))
    if n == 1:
        return pos
    edges = np.array(g.edge_list, dtype=int).reshape(-1, 2)
    temp = 0.1 * k * math.sqrt(n)
    cool = temp / (iterations + 1)
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta**2).sum(axis=-1))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 0.01)
        unit = delta / dist[..., None]
        rep = k * k / dist
        np.fill_diagonal(rep, 0.0)
        disp = (unit * rep[..., None]).sum(axis=1)
        if len(edges):
            i, j = edges[:, 0], edges[:, 1]
            pull = unit[i, j] * (dist[i, j] ** 2 / k)[:, None]
            np.add.at(disp, i, -pull)
            np.add.at(disp, j, pull)
        length = np.sqrt((disp**2).sum(axis=1))
        length = np.maximum(length, 1e-12)
        pos += disp / length[:, None] * np.minimum(length, temp)[:, None]
        temp -= cool
    return pos


def udg_window(g: SchedGraph, pos: np.ndarray) -> tuple[float, float]:
    """``(d_l, d_r)``: longest edge and shortest non-edge of a layout."""
    d = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=-1))
    adj = g.adjacency_matrix()
    iu = np.triu_indices(g.n, k=1)
    dist, is_edge = d[iu], adj[iu]
    d_l = float(dist[is_edge].max()) if is_edge.any() else 0.0
    d_r = float(dist[~is_edge].min()) if (~is_edge).any() else math.inf
    return d_l, d_r


def _window_centre(d_l: float, d_r: float) -> float:
    """Geometric mean of the window; a missing side stands in at ratio 1.21."""
    if d_l == 0.0 and math.isinf(d_r):
        return 1.0
    if d_l == 0.0:
        d_l = d_r / _OPEN_SIDE
    elif math.isinf(d_r):
        d_r = d_l * _OPEN_SIDE
    return math.sqrt(d_l * d_r)


def _fit_to_hardware(g: SchedGraph, pos: np.ndarray, hw: HardwareLimits) -> AtomRegister | None:
    target = _window_centre(*udg_window(g, pos))
    pos = pos - (pos.max(axis=0) + pos.min(axis=0)) / 2
    d = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=-1))
    np.fill_diagonal(d, np.inf)
    closest = float(d.min()) / target if g.n > 1 else math.inf
    reach = float(np.sqrt((pos**2).sum(axis=1)).max()) / target
    # blockade radii compatible with spacing floor, area cap and drive range
    lo = hw.d_min / closest * (1 + _FIT_SLACK) if closest > 0 else math.inf
    hi = hw.r_area / reach * (1 - _FIT_SLACK) if reach > 0 else math.inf
    r_small = hw.blockade_radius(hw.omega_range[1])
    r_large = hw.blockade_radius(hw.omega_range[0])
    lo, hi = max(lo, r_small), min(hi, r_large)
    if lo > hi:
        return None
    r_b = min(max(hw.blockade_radius(hw.omega_max), lo), hi)
    omega = hw.c6 / r_b**6
    return AtomRegister(pos * (r_b / target), (hw.c6 / omega) ** (1 / 6), omega, hw.c6)


def refine_spacing(g: SchedGraph, pos: np.ndarray, hw: HardwareLimits, *, margin: float = 0.03,
                   r_blockade: float | None = None) -> np.ndarray | None:
    """Push a UDG layout onto the spacing floor and area cap.

    The layout is scaled so its window centre sits on ``r_blockade`` (the
    nominal radius by default), then a squared-hinge penalty on every pair
    and radial constraint is minimised with L-BFGS.  Returns None when the
    penalty cannot be driven to zero.
    """
    n = g.n
    d_l, d_r = udg_window(g, pos)
    r_b = r_blockade or hw.blockade_radius(hw.omega_max)
    p0 = (pos - pos.mean(axis=0)) * (r_b / _window_centre(d_l, d_r))
    adj = g.adjacency_matrix()
    iu, ju = np.triu_indices(n, k=1)
    is_edge = adj[iu, ju]
    floor = hw.d_min * (1 + margin)
    upper = np.where(is_edge, r_b * (1 - margin), np.inf)
    lower = np.where(is_edge, floor, max(r_b * (1 + margin), floor))
    r_cap = hw.r_area * (1 - margin)

    def penalty(flat):
        p = flat.reshape(n, 2)
        diff = p[iu] - p[ju]
        dist = np.maximum(np.sqrt((diff**2).sum(axis=1)), 1e-9)
        over = np.clip(dist - upper, 0.0, None)
        under = np.clip(lower - dist, 0.0, None)
        radii = np.maximum(np.sqrt((p**2).sum(axis=1)), 1e-9)
        out = np.clip(radii - r_cap, 0.0, None)
        value = (over**2).sum() + (under**2).sum() + (out**2).sum()
        coef = (2 * (over - under) / dist)[:, None] * diff
        grad = np.zeros_like(p)
        np.add.at(grad, iu, coef)
        np.add.at(grad, ju, -coef)
        grad += (2 * out / radii)[:, None] * p
        return value, grad.ravel()

    res = minimize(penalty, p0.ravel(), jac=True, method="L-BFGS-B",
                   options={"maxiter": 3000, "ftol": 0.0, "gtol": 1e-12})
    if penalty(res.x)[0] > (1e-3 * margin * hw.d_min) ** 2:
        return None
    return res.x.reshape(n, 2)


def _radius_ladder(hw: HardwareLimits, steps: int = 4) -> list[float]:
    r0 = hw.blockade_radius(hw.omega_max)
    r1 = hw.blockade_radius(hw.omega_range[0])
    if r1 <= r0:
        return [r0]
    return [r0 * (r1 / r0) ** (k / steps) for k in range(steps + 1)]


def embed_graph(g: SchedGraph, hw: HardwareLimits | None = None, max_restarts: int = 100,
                rng_seed: int = 0, *, iterations: int | None = None, k: float = 1.0,
                refine: bool = True) -> AtomRegister:
    """Lay out ``g`` with Fruchterman-Reingold and rescale it onto the hardware.

    Attempt ``a`` uses the generator seeded by ``(rng_seed, a)``; the first
    attempt (by index) that opens a UDG window and fits the spacing and area
    limits wins.  With ``refine``, a layout that has no window or breaks the
    spacing or area limits is passed through :func:`refine_spacing` at a
    ladder of blockade radii before the attempt is given up.
    """
    hw = hw or HardwareLimits()
    if g.n == 0:
        raise ValueError("cannot embed an empty graph")
    if g.n > hw.max_atoms:
        raise LimitError(f"{g.n} atoms exceed the device limit of {hw.max_atoms}")
    window_seen = False
    for attempt in range(max(1, max_restarts)):
        rng = np.random.default_rng([int(rng_seed) % 2**63, attempt])
        pos = fruchterman_reingold(g, rng, iterations=iterations, k=k)
        d_l, d_r = udg_window(g, pos)
        if d_r > d_l * WINDOW_RATIO_FLOOR:
            window_seen = True
            reg = _fit_to_hardware(g, pos, hw)
            if reg is not None:
                return reg
        if not refine:
            continue
        # nominal radius first, then larger ones (weaker drive) up to the range limit
        for r_b in _radius_ladder(hw):
            refined = refine_spacing(g, pos, hw, r_blockade=r_b)
            if refined is None:
                continue
            d_l, d_r = udg_window(g, refined)
            if d_r > d_l * WINDOW_RATIO_FLOOR:
                window_seen = True
                reg = _fit_to_hardware(g, refined, hw)
                if reg is not None:
                    return reg
    if window_seen:
        raise HardwareInfeasible("UDG layouts were found but none fits the spacing/area limits")
    raise NoUdgWindowFound(f"no unit-disk window after {max_restarts} layout attempts")


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    long_edges: list[tuple[int, int]] = field(default_factory=list)
    close_non_edges: list[tuple[int, int]] = field(default_factory=list)
    spacing_violations: list[tuple[int, int]] = field(default_factory=list)
    area_violations: list[int] = field(default_factory=list)
    d_l: float = 0.0
    d_r: float = math.inf

    @property
    def margin(self) -> float:
        return self.d_r - self.d_l

    @property
    def udg_violations(self) -> int:
        return len(self.long_edges) + len(self.close_non_edges)

    @property
    def ok(self) -> bool:
        return not (self.long_edges or self.close_non_edges or self.spacing_violations or self.area_violations)

    def violation_set(self) -> dict:
        return {
            "long_edges": sorted(self.long_edges),
            "close_non_edges": sorted(self.close_non_edges),
            "spacing": sorted(self.spacing_violations),
            "area": sorted(self.area_violations),
        }

    def to_dict(self) -> dict:
        out = self.violation_set()
        out.update(d_l=self.d_l, d_r=self.d_r if math.isfinite(self.d_r) else None,
                   margin=self.margin if math.isfinite(self.margin) else None, ok=self.ok)
        return out


def validate_register(reg: AtomRegister, g: SchedGraph, hw: HardwareLimits | None = None) -> ValidationReport:
    hw = hw or HardwareLimits()
    if reg.n != g.n:
        raise ValueError(f"register has {reg.n} atoms, graph has {g.n} nodes")
    d = reg.distances()
    adj = g.adjacency_matrix()
    rep = ValidationReport()
    rep.d_l, rep.d_r = udg_window(g, reg.positions)
    r = reg.r_blockade
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if adj[i, j] and not d[i, j] < r:
                rep.long_edges.append((i, j))
            elif not adj[i, j] and not d[i, j] > r:
                rep.close_non_edges.append((i, j))
            if d[i, j] < hw.d_min:
                rep.spacing_violations.append((i, j))
    radii = np.sqrt((reg.positions**2).sum(axis=1))
    rep.area_violations = [int(j) for j in np.flatnonzero(radii > hw.r_area)]
    return rep
