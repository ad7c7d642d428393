"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array, check_random_state

from .instances import DdppInstance


def check_deliveries(X) -> np.ndarray:
    """Validate a delivery table with columns (t_leave, t_return, cost) in minutes."""
    if isinstance(X, DdppInstance):
        return np.column_stack([X.windows, X.costs]) if X.n else np.zeros((0, 3))
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if X.shape[1] != 3:
        raise ValueError(f"expected 3 columns (t_leave, t_return, cost), got {X.shape[1]}")
    bad = np.flatnonzero(X[:, 0] >= X[:, 1])
    if bad.size:
        raise ValueError(f"delivery {int(bad[0])} has t_leave >= t_return")
    if (X[:, 2] < 0).any():
        raise ValueError("costs must be non-negative")
    return X


def check_battery(battery) -> float:
    if not isinstance(battery, numbers.Real) or isinstance(battery, bool) or not battery > 0:
        raise ValueError(f"battery must be a positive number, got {battery!r}")
    return float(battery)


def as_instance(X, battery) -> DdppInstance:
    """Build an instance from a delivery table (or pass an instance through)."""
    if isinstance(X, DdppInstance):
        return X
    X = check_deliveries(X)
    battery = check_battery(battery)
    # round through decimal strings so float noise cannot break the fixed-point grid
    windows = [(f"{a:.3f}", f"{b:.3f}") for a, b in X[:, :2]]
    costs = [f"{c:.6f}" for c in X[:, 2]]
    return DdppInstance.from_minutes(windows, costs, f"{battery:.6f}")


def check_bitstrings(X, n: int | None = None) -> np.ndarray:
    """0/1 matrix with one row per shot."""
    X = check_array(X, dtype=None, ensure_min_samples=0)
    if not np.isin(X, (0, 1)).all():
        raise ValueError("bitstrings must contain only 0 and 1")
    if n is not None and X.shape[1] != n:
        raise ValueError(f"bitstrings have width {X.shape[1]}, expected {n}")
    return X.astype(np.uint8)


def seed_from(random_state) -> int:
    """Integer seed from an int, None or RandomState, for the seeded stages."""
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        return int(random_state)
    return int(check_random_state(random_state).randint(2**31 - 1))
