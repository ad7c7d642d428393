"""scikit-learn style wrappers around the scheduling pipeline.

Schedulers take a delivery table ``X`` of shape (n, 3) with columns
``t_leave, t_return, cost`` in minutes (or a DdppInstance) and assign every
delivery to a drone, exposing the result as ``labels_``.  Like clustering,
scheduling is transductive: ``predict(X)`` solves ``X`` with the fitted
configuration.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embedding import HardwareLimits, embed_graph, validate_register
from .partition import PartitionSolution, enumerate_exact, greedy_baseline, solve_partition
from .pipeline import TARGET_SCALE, PipelineConfig, run_pipeline
from .schedgraph import build_graph
from .validation import as_instance, seed_from


class _Scheduler(ClusterMixin, BaseEstimator):
    def _solve(self, inst) -> tuple[PartitionSolution, dict]:
        raise NotImplementedError

    def fit(self, X, y=None):
        inst = as_instance(X, self.battery)
        sol, extra = self._solve(inst)
        self.solution_ = sol
        self.labels_ = np.asarray(sol.labels(), dtype=int)
        self.n_drones_ = sol.drones
        self.status_ = sol.status
        self.n_features_in_ = 3
        for k, v in extra.items():
            setattr(self, k, v)
        return self

    def predict(self, X):
        check_is_fitted(self, "labels_")
        return self._solve(as_instance(X, self.battery))[0].labels()

    def score(self, X, y=None) -> float:
        """Negative drone count, so that higher is better."""
        check_is_fitted(self, "labels_")
        return -float(self._solve(as_instance(X, self.battery))[0].drones)


class QISScheduler(_Scheduler):
    """Sample candidate single-drone schedules, repair them and pick a minimum partition."""

    def __init__(self, battery=30.0, backend="classical", n_meas=500, target_scale=TARGET_SCALE,
                 noise_rate=0.0, time_limit=60.0, random_state=0):
        self.battery = battery
        self.backend = backend
        self.n_meas = n_meas
        self.target_scale = target_scale
        self.noise_rate = noise_rate
        self.time_limit = time_limit
        self.random_state = random_state

    def _solve(self, inst):
        cfg = PipelineConfig(backend=self.backend, n_meas=self.n_meas, seed=seed_from(self.random_state),
                             target_scale=self.target_scale, noise_rate=self.noise_rate,
                             time_limit=self.time_limit)
        res = run_pipeline(inst, cfg)
        return res.solution, {"pool_": res.pool, "raw_": res.raw, "timings_": res.timings}


class GreedyScheduler(_Scheduler):
    """Interval colouring by departure time, then battery splitting."""

    def __init__(self, battery=30.0):
        self.battery = battery

    def _solve(self, inst):
        return greedy_baseline(build_graph(inst), inst), {}


class ExactScheduler(_Scheduler):
    """Optimal partition over every battery-feasible schedule (small instances only)."""

    def __init__(self, battery=30.0, n_cap=20):
        self.battery = battery
        self.n_cap = n_cap

    def _solve(self, inst):
        pool, d_exact = enumerate_exact(build_graph(inst), inst, self.n_cap)
        sol = solve_partition(pool, float("inf"), inst=inst)
        return sol, {"d_exact_": d_exact, "n_feasible_sets_": len(pool)}


class FRLayout(TransformerMixin, BaseEstimator):
    """Atom positions (um) for the scheduling graph of a delivery table."""

    def __init__(self, hardware=None, max_restarts=100, random_state=0):
        self.hardware = hardware
        self.max_restarts = max_restarts
        self.random_state = random_state

    def _limits(self) -> HardwareLimits:
        if self.hardware is None:
            return HardwareLimits()
        if isinstance(self.hardware, HardwareLimits):
            return self.hardware
        return HardwareLimits.from_dict(self.hardware)

    def fit(self, X, y=None):
        inst = as_instance(X, 1.0)
        g = build_graph(inst)
        reg = embed_graph(g, self._limits(), self.max_restarts, seed_from(self.random_state))
        self.register_ = reg
        self.omega_max_ = reg.omega_max
        self.r_blockade_ = reg.r_blockade
        self.validation_ = validate_register(reg, g, self._limits())
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "register_")
        n = as_instance(X, 1.0).n
        if n != self.register_.n:
            raise ValueError(f"layout was fitted on {self.register_.n} deliveries, got {n}")
        return np.array(self.register_.positions, dtype=float)
