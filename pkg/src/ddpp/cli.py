"""Command-line front end; every stage reads and writes plain files.

Exit codes: 0 success, 1 usage error, 2 infeasible or over a limit
(no UDG window, register or instance too large), 3 internal error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import bench as bench_mod
from .correction import build_pool, load_feasible_pool, save_feasible_pool
from .embedding import HardwareLimits, embed_graph, load_register, save_register, validate_register
from .emulator import DEFAULT_N_CAP, evolve, sample
from .errors import DdppError
from .instances import SCHEMA_VERSION, generate_instance, load_instance, save_instance
from .partition import (
    PartitionSolution,
    enumerate_exact,
    greedy_baseline,
    save_solution,
    solve_partition,
)
from .pipeline import PILOT_CUTOFF, TARGET_SCALE, scaled_grid, tune_schedule
from .pulses import load_schedule, save_schedule
from .sampler import SamplerConfig, sample_classical
from .samples import load_pool, save_pool
from .schedgraph import build_graph

FORMATS_HELP = f"""
File formats (schema version {SCHEMA_VERSION}):

\b
  instance   JSON {{version, n, battery, seed, deliveries: [{{id, t_leave, t_return, cost}}]}}
             with decimal strings for times and costs
  register   JSON {{version, omega_max, c6, r_blockade, atoms: [{{id, x, y}}]}}
  schedule   JSON {{version, total_time, omega_max, delta_max}} (ns, rad/us)
  pool       one bitstring per line, char j = delivery j, optional
             '# n=.. n_meas=.. seed=.. schedule=..' header; feasible pools
             carry a '<file>.json' sidecar with multiplicities and stats
  solution   JSON {{drones, sets: [[ids]], status, wall_time_ms}}
"""


def _csv_ints(value: str) -> list[int]:
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from exc


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


@click.group(help="Hybrid neutral-atom / classical drone delivery packing.\n" + FORMATS_HELP)
@click.option("--threads", type=int, default=None, help="Worker processes for sweeps (default: all cores).")
@click.pass_context
def cli(ctx, threads):
    ctx.ensure_object(dict)
    ctx.obj["threads"] = max(1, threads or os.cpu_count() or 1)


@cli.command(help="Generate a random instance.")
@click.option("--n", "n", type=int, required=True)
@click.option("--battery", type=str, required=True, help="Battery budget B in minutes.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cost-factor", type=click.Choice(["log10", "natural"]), default="log10", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(n, battery, seed, cost_factor, out):
    inst = generate_instance(n, battery, seed, cost_factor=cost_factor)
    save_instance(inst, out)
    click.echo(f"wrote {out}: n={inst.n} battery={inst.battery} target_weight={inst.target_weight():.4f}")


@cli.command(help="Write the scheduling graph as DOT (.dot) or an edge list.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def graph(inst, out):
    g = build_graph(load_instance(inst))
    text = g.to_dot() if out.endswith(".dot") else g.to_edge_text()
    Path(out).write_text(text)
    click.echo(f"wrote {out}: {g.n} nodes, {len(g.edge_list)} edges")


@cli.group(invoke_without_command=True, help="Embed the graph as an atom register; 'embed validate' checks one.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False))
@click.option("--hw", type=click.Path(exists=True, dir_okay=False), help="Hardware limits JSON.")
@click.option("--restarts", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
def embed(ctx, inst, hw, restarts, seed, out):
    if ctx.invoked_subcommand is not None:
        return
    if not inst or not out:
        raise click.UsageError("embed needs --inst and --out")
    limits = HardwareLimits.from_dict(json.loads(Path(hw).read_text())) if hw else HardwareLimits()
    g = build_graph(load_instance(inst))
    reg = embed_graph(g, limits, restarts, seed)
    save_register(reg, out)
    click.echo(f"wrote {out}: {reg.n} atoms, omega_max={reg.omega_max:.6g} rad/us, R_b={reg.r_blockade:.4g} um")


@embed.command("validate", help="Check a register against the instance graph and hardware limits.")
@click.option("--reg", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--hw", type=click.Path(exists=True, dir_okay=False))
def embed_validate(reg, inst, hw):
    limits = HardwareLimits.from_dict(json.loads(Path(hw).read_text())) if hw else HardwareLimits()
    report = validate_register(load_register(reg), build_graph(load_instance(inst)), limits)
    _echo_json(report.to_dict())
    if not report.ok:
        sys.exit(2)


def _load_grid(path, omega_max):
    if path is None:
        return scaled_grid(omega_max)
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        # factors of omega_max crossed with durations in ns
        return [(f * omega_max, float(T)) for f in data["delta_factors"] for T in data["durations_ns"]]
    return [(float(d), float(T)) for d, T in data]


@cli.command(help="Grid-search delta_max and T so the pilot mean weight tracks the target.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--reg", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--grid", type=click.Path(exists=True, dir_okay=False),
              help="JSON list of [delta_max, T_ns] or {delta_factors, durations_ns}.")
@click.option("--pilot-shots", type=int, default=100, show_default=True)
@click.option("--pilot-cutoff", type=float, default=PILOT_CUTOFF, show_default=True)
@click.option("--target-scale", type=float, default=TARGET_SCALE, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def tune(inst, reg, grid, pilot_shots, pilot_cutoff, target_scale, seed, out):
    instance = load_instance(inst)
    register = load_register(reg)
    if register.n != instance.n:
        raise click.UsageError(f"register has {register.n} atoms but the instance has {instance.n} deliveries")
    target = target_scale * instance.target_weight()
    res = tune_schedule(register, target, grid=_load_grid(grid, register.omega_max),
                        pilot_shots=pilot_shots, rng_seed=seed, pilot_cutoff=pilot_cutoff)
    save_schedule(res.schedule, out)
    click.echo(f"wrote {out}: T={res.schedule.total_time:.6g} ns delta_max={res.schedule.delta_max:.6g} "
               f"target={target:.4f}")


@cli.command("sample", help="Draw raw bitstrings from the emulator or the classical sampler.")
@click.option("--backend", type=click.Choice(["emulator", "classical"]), required=True)
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--reg", type=click.Path(exists=True, dir_okay=False))
@click.option("--sched", type=click.Path(exists=True, dir_okay=False))
@click.option("--target-weight", type=float, default=None, help="Classical target (default: scaled w-bar).")
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--shots", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-cap", type=int, default=DEFAULT_N_CAP, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def sample_cmd(backend, inst, reg, sched, target_weight, noise, shots, seed, n_cap, out):
    instance = load_instance(inst)
    g = build_graph(instance)
    if backend == "emulator":
        if not reg or not sched:
            raise click.UsageError("the emulator backend needs --reg and --sched")
        schedule = load_schedule(sched)
        register = load_register(reg)
        if register.n != instance.n:
            raise click.UsageError(f"register has {register.n} atoms but the instance has {instance.n} deliveries")
        state = evolve(register, schedule, n_cap)
        pool = sample(state, shots, seed, schedule=schedule.digest())
    else:
        target = TARGET_SCALE * instance.target_weight() if target_weight is None else target_weight
        pool = sample_classical(g, SamplerConfig(target, shots, noise, seed))
    save_pool(pool, out)
    click.echo(f"wrote {out}: {pool.n_meas} shots, mean weight {pool.weights().mean():.4f}")



@cli.command(help="Repair raw bitstrings into a battery-feasible pool plus singletons.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pool", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def correct(inst, pool, seed, out):
    instance = load_instance(inst)
    g = build_graph(instance)
    fp = build_pool(g, instance, load_pool(pool, instance.n), seed)
    save_feasible_pool(fp, out)
    click.echo(f"wrote {out}: {len(fp)} distinct feasible sets; stats {fp.stats}")


def _write_solution(sol: PartitionSolution, out, extra: dict | None = None):
    save_solution(sol, out)
    if extra:
        data = json.loads(Path(out).read_text()) | extra
        Path(out).write_text(json.dumps(data, indent=2) + "\n")
    click.echo(f"wrote {out}: drones={sol.drones} status={sol.status}")


@cli.command(help="Minimum exact cover of the deliveries by pool sets.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pool", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--time-limit", type=float, default=60.0, show_default=True)
@click.option("--node-limit", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def solve(inst, pool, time_limit, node_limit, out):
    instance = load_instance(inst)
    fp = load_feasible_pool(pool)
    if fp.n != instance.n:
        raise click.UsageError(f"pool width {fp.n} does not match instance size {instance.n}")
    _write_solution(solve_partition(fp, time_limit, inst=instance, node_limit=node_limit), out)


@cli.command(help="Exact optimum by full enumeration (n <= 20).")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n-cap", type=int, default=20, show_default=True)
@click.option("--pool-out", type=click.Path(dir_okay=False), help="Also write the full feasible family.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def exact(inst, n_cap, pool_out, out):
    instance = load_instance(inst)
    g = build_graph(instance)
    fp, d_exact = enumerate_exact(g, instance, n_cap)
    if pool_out:
        save_feasible_pool(fp, pool_out)
    sol = solve_partition(fp, float("inf"), inst=instance)
    if sol.drones != d_exact:
        raise DdppError(f"branch and bound found {sol.drones} drones but the subset DP found {d_exact}")
    _write_solution(sol, out, {"d_exact": d_exact, "feasible_sets": len(fp)})


@cli.command(help="Greedy interval colouring followed by battery splitting.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def baseline(inst, out):
    instance = load_instance(inst)
    sol = greedy_baseline(build_graph(instance), instance)
    _write_solution(sol, out, sol.meta)


# --------------------------------------------------------------------------
# bench


@cli.group(help="Experiment sweeps writing CSV plus a JSON manifest.")
def bench():
    pass


def _manifest_path(out) -> str:
    return str(Path(out).with_suffix("")) + ".manifest.json"


@bench.command("quality", help="Pipeline vs exact optimum and baseline over random instances.")
@click.option("--sizes", default="5,8,10,12", show_default=True)
@click.option("--instances", type=int, default=20, show_default=True)
@click.option("--shots", type=int, default=500, show_default=True)
@click.option("--backend", type=click.Choice(["emulator", "classical"]), default="emulator", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--time-limit", type=float, default=60.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def bench_quality(ctx, sizes, instances, shots, backend, seed, time_limit, out):
    sizes = _csv_ints(sizes)
    rows = bench_mod.run_quality_study(sizes, instances, shots, backend, seed,
                                       workers=ctx.obj["threads"], time_limit=time_limit)
    bench_mod.write_csv(rows, out, bench_mod.QUALITY_FIELDS)
    summary = bench_mod.summarize_quality(rows)
    config = {"sizes": sizes, "instances": instances, "shots": shots, "backend": backend, "time_limit": time_limit}
    bench_mod.write_manifest(_manifest_path(out), "quality", config, {"seed": seed},
                             {"summary": {str(k): v for k, v in summary.items()}})
    _echo_json({str(k): v for k, v in summary.items()})


@bench.command("sampling", help="Approximation ratio vs number of measurements (classical sampler).")
@click.option("--inst", "insts", type=click.Path(exists=True, dir_okay=False), multiple=True, required=True)
@click.option("--grid", default="100,200,400,800,1600", show_default=True)
@click.option("--reps", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--time-limit", type=float, default=60.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def bench_sampling(ctx, insts, grid, reps, seed, time_limit, out):
    grid = _csv_ints(grid)
    rows, summaries, thresholds = [], {}, []
    for path in insts:
        instance = load_instance(path)
        part = bench_mod.run_sampling_study(instance, grid, reps, seed, workers=ctx.obj["threads"],
                                            time_limit=time_limit)
        for r in part:
            r["instance"] = path
        rows += part
        summ = bench_mod.summarize_sampling(part)
        summaries[path] = summ
        thresholds.append((instance.n, bench_mod.threshold_n_meas(summ)))
    bench_mod.write_csv(rows, out, ["instance"] + bench_mod.SAMPLING_FIELDS)
    extra = {"summary": summaries, "thresholds": thresholds}
    try:
        extra["threshold_fit"] = bench_mod.fit_threshold_scaling(thresholds)
    except ValueError as exc:
        extra["threshold_fit"] = f"skipped: {exc}"
    config = {"instances": list(insts), "grid": grid, "reps": reps, "time_limit": time_limit}
    bench_mod.write_manifest(_manifest_path(out), "sampling", config, {"seed": seed}, extra)
    _echo_json(extra)


@bench.command("histogram", help="Hamming-weight histogram of raw and corrected samples.")
@click.option("--inst", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--pool", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def bench_histogram(inst, pool, seed, out):
    instance = load_instance(inst)
    g = build_graph(instance)
    raw = load_pool(pool, instance.n)
    hist = bench_mod.weight_histogram(raw, build_pool(g, instance, raw, seed), g)
    bench_mod.write_csv(hist, out, bench_mod.HISTOGRAM_FIELDS)
    info = {"raw_invalid_fraction": bench_mod.invalid_fraction(hist, "raw"),
            "corrected_invalid_fraction": bench_mod.invalid_fraction(hist, "corrected")}
    bench_mod.write_manifest(_manifest_path(out), "histogram", {"inst": inst, "pool": pool}, {"seed": seed}, info)
    _echo_json(info)


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="ddpp", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    except DdppError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error code
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
