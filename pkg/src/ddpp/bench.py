"""Experiment harness: quality sweeps, sample-count scaling, weight histograms.

Every row carries the seeds it was produced from, so any row can be rerun on
its own.  Results are plain CSV plus a small JSON manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .correction import FeasiblePool, build_pool
from .errors import DdppError
from .instances import DdppInstance, generate_instance
from .partition import enumerate_exact, greedy_baseline, lower_bound, metrics, solve_partition
from .pipeline import PipelineConfig, derive_seed, draw_samples
from .sampler import SamplerConfig, sample_classical
from .samples import SamplePool
from .schedgraph import SchedGraph, build_graph, is_independent_set

BATTERIES = (30, 40, 50, 60)
EXACT_LIMIT = 20

QUALITY_FIELDS = [
    "n", "index", "instance_seed", "battery", "pipeline_seed", "backend", "n_meas", "target_weight",
    "raw_mean_weight", "raw_valid_fraction", "pool_size", "drones", "status", "d_exact", "lower_bound",
    "rho", "delta", "baseline_drones", "baseline_rho", "t_instance", "t_graph", "t_embed", "t_tune", "t_sample",
    "t_correct", "t_solve", "t_exact", "t_baseline", "wall_time", "error",
]
SAMPLING_FIELDS = ["n_meas", "repetition", "sample_seed", "pool_size", "drones", "d_exact", "rho", "delta"]
HISTOGRAM_FIELDS = ["weight", "raw_valid", "raw_invalid", "corrected_valid", "corrected_invalid"]

_STAGES = ("instance", "graph", "embed", "tune", "sample", "correct", "solve", "exact", "baseline")


def _ratio(d, d_ref):
    return float(metrics(d, d_ref)[0])


# --------------------------------------------------------------------------
# quality study


@dataclass(frozen=True)
class QualityJob:
    n: int
    index: int
    instance_seed: int
    battery: int
    cfg: PipelineConfig


def quality_jobs(sizes, instances_per_size: int, n_meas: int, backend: str, seed: int,
                 batteries=BATTERIES, **cfg_kw) -> list[QualityJob]:
    jobs = []
    for n in sizes:
        for i in range(instances_per_size):
            cfg = PipelineConfig(backend=backend, n_meas=n_meas, seed=derive_seed(seed, n, i, 1), **cfg_kw)
            jobs.append(QualityJob(n, i, derive_seed(seed, n, i, 0), batteries[i % len(batteries)], cfg))
    return jobs


def run_quality_row(job: QualityJob) -> dict:
    """One instance through the pipeline plus the exact and baseline references."""
    t_start = time.perf_counter()
    row = dict.fromkeys(QUALITY_FIELDS, "")
    row.update(n=job.n, index=job.index, instance_seed=job.instance_seed, battery=job.battery,
               pipeline_seed=job.cfg.seed, backend=job.cfg.backend, n_meas=job.cfg.n_meas)
    timings = dict.fromkeys(_STAGES, 0.0)
    try:
        t = time.perf_counter()
        inst = generate_instance(job.n, job.battery, job.instance_seed)
        row["target_weight"] = round(job.cfg.target_scale * inst.target_weight(), 6)
        row["lower_bound"] = lower_bound(inst)
        timings["instance"] = time.perf_counter() - t
        t = time.perf_counter()
        g = build_graph(inst)
        timings["graph"] = time.perf_counter() - t
        raw, _, _ = draw_samples(inst, g, job.cfg, timings)
        t = time.perf_counter()
        row["raw_mean_weight"] = round(float(raw.weights().mean()), 6)
        row["raw_valid_fraction"] = round(sum(is_independent_set(g, m) for m in raw.masks()) / raw.n_meas, 6)
        timings["sample"] += time.perf_counter() - t
        t = time.perf_counter()
        pool = build_pool(g, inst, raw, derive_seed(job.cfg.seed, 4))
        timings["correct"] = time.perf_counter() - t
        t = time.perf_counter()
        sol = solve_partition(pool, job.cfg.time_limit, inst=inst, node_limit=job.cfg.node_limit)
        timings["solve"] = time.perf_counter() - t
        row.update(pool_size=len(pool), drones=sol.drones, status=sol.status)
        t = time.perf_counter()
        base = greedy_baseline(g, inst)
        timings["baseline"] = time.perf_counter() - t
        row["baseline_drones"] = base.drones
        if job.n <= EXACT_LIMIT:
            t = time.perf_counter()
            _, d_exact = enumerate_exact(g, inst)
            timings["exact"] = time.perf_counter() - t
            rho, delta = metrics(sol.drones, d_exact)
            row.update(d_exact=d_exact, rho=round(float(rho), 6), delta=delta,
                       baseline_rho=round(_ratio(base.drones, d_exact), 6))
    except (DdppError, ValueError, ZeroDivisionError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    for k in _STAGES:
        row[f"t_{k}"] = round(timings[k], 6)
    row["wall_time"] = round(time.perf_counter() - t_start, 6)
    return row


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def run_quality_study(sizes, instances_per_size: int, n_meas: int, backend: str = "classical", seed: int = 0,
                      *, workers: int = 1, batteries=BATTERIES, **cfg_kw) -> list[dict]:
    """One CSV row per instance; stage failures land in the ``error`` column."""
    jobs = quality_jobs(sizes, instances_per_size, n_meas, backend, seed, batteries, **cfg_kw)
    return _map(run_quality_row, jobs, workers)


def summarize_quality(rows: list[dict]) -> dict[int, dict]:
    """Per size: median QIS and baseline ratio, max gap, failures."""
    out: dict[int, dict] = {}
    for n in sorted({r["n"] for r in rows}):
        ok = [r for r in rows if r["n"] == n and not r["error"] and r["rho"] != ""]
        out[n] = {
            "instances": sum(r["n"] == n for r in rows),
            "errors": sum(r["n"] == n and bool(r["error"]) for r in rows),
            "median_rho": statistics.median(r["rho"] for r in ok) if ok else math.nan,
            "median_baseline_rho": statistics.median(r["baseline_rho"] for r in ok) if ok else math.nan,
            "max_delta": max((r["delta"] for r in ok), default=math.nan),
            "rows_delta_above_1": sum(r["delta"] > 1 for r in ok),
        }
    return out


# --------------------------------------------------------------------------
# sampling study


def _sampling_cell(args) -> dict:
    g, inst, d_exact, n_meas, rep, seed, time_limit, target = args
    s = derive_seed(seed, n_meas, rep)
    raw = sample_classical(g, SamplerConfig(target, n_meas, 0.0, s))
    pool = build_pool(g, inst, raw, derive_seed(s, 4))
    sol = solve_partition(pool, time_limit, inst=inst)
    rho, delta = metrics(sol.drones, d_exact)
    return {"n_meas": n_meas, "repetition": rep, "sample_seed": s, "pool_size": len(pool),
            "drones": sol.drones, "d_exact": d_exact, "rho": round(float(rho), 6), "delta": delta}


def run_sampling_study(inst: DdppInstance, n_meas_grid, repetitions: int = 30, seed: int = 0, *,
                       workers: int = 1, time_limit: float = 60.0, d_exact: int | None = None,
                       target_scale: float = PipelineConfig.target_scale) -> list[dict]:
    """Repeated independent classical pools per sample count, scored against the exact optimum."""
    grid = [int(m) for m in n_meas_grid]
    if not grid:
        raise ValueError("n_meas_grid is empty")
    g = build_graph(inst)
    if d_exact is None:
        _, d_exact = enumerate_exact(g, inst)
    target = target_scale * inst.target_weight()
    cells = [(g, inst, d_exact, m, r, seed, time_limit, target) for m in grid for r in range(repetitions)]
    return _map(_sampling_cell, cells, workers)


def summarize_sampling(rows: list[dict]) -> list[dict]:
    out = []
    for m in sorted({r["n_meas"] for r in rows}):
        rhos = sorted(r["rho"] for r in rows if r["n_meas"] == m)
        q1, med, q3 = np.percentile(rhos, [25, 50, 75])
        out.append({"n_meas": m, "median_rho": float(med), "q1": float(q1), "q3": float(q3),
                    "min_rho": rhos[0], "max_rho": rhos[-1], "repetitions": len(rhos)})
    return out


def threshold_n_meas(summary: list[dict]) -> int | None:
    """Smallest sample count from which the median ratio stays at 1."""
    hit = None
    for row in sorted(summary, key=lambda r: r["n_meas"], reverse=True):
        if row["median_rho"] > 1.0:
            break
        hit = row["n_meas"]
    return hit


def fit_threshold_scaling(points) -> dict:
    """Least-squares fit of ``log N* = a + N log(base)`` over ``(N, N*)`` pairs."""
    pts = [(float(n), float(m)) for n, m in points if m]
    if len(pts) < 2 or len({n for n, _ in pts}) < 2:
        raise ValueError("need thresholds at two or more distinct sizes")
    ns, ms = np.array(pts).T
    slope, intercept = np.polyfit(ns, np.log(ms), 1)
    return {"base": float(math.exp(slope)), "prefactor": float(math.exp(intercept)), "points": len(pts)}


# --------------------------------------------------------------------------
# histograms


def weight_histogram(raw: SamplePool, corrected: FeasiblePool | SamplePool, g: SchedGraph) -> list[dict]:
    """Per-weight counts split by whether the bitstring is an independent set.

    A FeasiblePool counts each distinct set by its multiplicity in the raw
    run (singletons added afterwards count once).
    """
    if raw.n_meas and raw.n != g.n:
        raise ValueError(f"raw pool width {raw.n} != graph size {g.n}")
    table: dict[int, dict] = {}

    def bump(mask: int, key: str, k: int = 1):
        w = mask.bit_count()
        row = table.setdefault(w, dict.fromkeys(HISTOGRAM_FIELDS, 0) | {"weight": w})
        row[f"{key}_{'valid' if is_independent_set(g, mask) else 'invalid'}"] += k

    for m in raw.masks():
        bump(m, "raw")
    if isinstance(corrected, FeasiblePool):
        for m in corrected.sets:
            bump(m, "corrected", corrected.origin_counts.get(m, 1))
    else:
        for m in corrected.masks():
            bump(m, "corrected")
    return [table[w] for w in sorted(table)]


def invalid_fraction(hist: list[dict], key: str = "raw") -> float:
    bad = sum(r[f"{key}_invalid"] for r in hist)
    total = bad + sum(r[f"{key}_valid"] for r in hist)
    return bad / total if total else 0.0


# --------------------------------------------------------------------------
# output


def write_csv(rows: list[dict], path, fields=None) -> None:
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def _git_hash() -> str | None:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:16]


def write_manifest(path, study: str, config: dict, seeds: dict, extra: dict | None = None) -> dict:
    manifest = {
        "study": study,
        "package_version": __version__,
        "git_hash": _git_hash(),
        "config": config,
        "config_hash": config_hash(config),
        "seeds": seeds,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest

