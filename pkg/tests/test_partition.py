import itertools
from fractions import Fraction

import numpy as np
import pytest

from ddpp.correction import FeasiblePool, build_pool
from ddpp.errors import DivisionByZeroGuard, PoolMissingSingletons, TooLarge
from ddpp.instances import generate_instance
from ddpp.partition import (OPTIMAL, TIMED_OUT, enumerate_exact, enumerate_feasible_sets, greedy_baseline,
                            load_solution, lower_bound, metrics, save_solution, solve_partition)
from ddpp.samples import SamplePool
from ddpp.schedgraph import SchedGraph, build_graph, is_independent_set, max_overlap_depth

from conftest import complete_graph, make_instance


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def brute_optimum(g, inst):
    best = inst.n
    for part in set_partitions(list(range(inst.n))):
        if len(part) >= best:
            continue
        masks = [sum(1 << j for j in block) for block in part]
        if all(is_independent_set(g, m) and inst.set_cost_units(m) <= inst.battery_units for m in masks):
            best = len(part)
    return best


def singletons(n):
    return [1 << j for j in range(n)]


def test_singleton_pool_forces_n():
    sol = solve_partition(FeasiblePool(5, singletons(5)))
    assert sol.drones == 5 and sol.status == OPTIMAL and sol.is_exact_cover()


def test_perfect_two_set_partition():
    sol = solve_partition(FeasiblePool(6, [0b000111, 0b111000, 0b011110] + singletons(6)))
    assert sol.drones == 2
    assert sorted(sol.selected_sets) == [0b000111, 0b111000]


def test_edgeless_single_drone():
    inst = make_instance([(0, 1), (2, 3), (4, 5)], [1, 1, 1], 3)
    pool, d = enumerate_exact(build_graph(inst), inst)
    assert d == 1 and 0b111 in pool


def test_complete_graph_needs_n_drones():
    inst = make_instance([(0, 9), (1, 9), (2, 9), (3, 9)], [1, 1, 1, 1], 100)
    g = build_graph(inst)
    assert g.edge_list == complete_graph(4).edge_list
    pool, d = enumerate_exact(g, inst)
    assert d == 4 and sorted(pool.sets) == singletons(4)


def test_turin_style_instance():
    # eight deliveries in three overlapping waves; battery binds on the longest chain
    windows = [(0, 10), (2, 14), (5, 12), (11, 20), (13, 25), (15, 22), (21, 30), (26, 33)]
    costs = [12, 14, 8, 10, 15, 9, 11, 7]
    inst = make_instance(windows, costs, 30)
    g = build_graph(inst)
    pool, d = enumerate_exact(g, inst)
    assert d == brute_optimum(g, inst)
    assert solve_partition(pool, inst=inst).drones == d
    assert d >= lower_bound(inst)


@pytest.mark.parametrize("seed", range(12))
def test_exact_matches_brute_force(seed):
    inst = generate_instance(7 + seed % 3, [30, 40, 50][seed % 3], seed)
    g = build_graph(inst)
    pool, d = enumerate_exact(g, inst)
    assert d == brute_optimum(g, inst)
    assert solve_partition(pool).drones == d


@pytest.mark.parametrize("seed", range(6))
def test_feasible_family_matches_filter(seed):
    inst = generate_instance(10, 25, seed)
    g = build_graph(inst)
    expected = {m for m in range(1, 1 << 10)
                if is_independent_set(g, m) and inst.set_cost_units(m) <= inst.battery_units}
    assert set(enumerate_feasible_sets(g, inst)) == expected


@pytest.mark.parametrize("seed", range(5))
def test_pool_monotonicity(seed):
    inst = generate_instance(16, 30, seed)
    g = build_graph(inst)
    full, d_exact = enumerate_exact(g, inst)
    rng = np.random.default_rng(seed)
    extra = [m for m in full.sets if m.bit_count() > 1]
    rng.shuffle(extra)
    previous = inst.n + 1
    for k in (0, 5, 20, 80, len(extra)):
        sol = solve_partition(FeasiblePool(inst.n, singletons(inst.n) + extra[:k]), inst=inst)
        assert sol.is_exact_cover() and set(sol.selected_sets) <= set(extra[:k]) | set(singletons(inst.n))
        assert sol.drones <= previous
        previous = sol.drones
    assert previous == d_exact


def test_missing_singletons():
    with pytest.raises(PoolMissingSingletons):
        solve_partition(FeasiblePool(3, [0b011, 0b100]))


def test_node_limit_returns_incumbent():
    inst = generate_instance(60, 40, 1)
    g = build_graph(inst)
    raw = SamplePool(np.random.default_rng(0).integers(0, 2, size=(2000, 60)))
    pool = build_pool(g, inst, raw)
    sol = solve_partition(pool, inst=inst, node_limit=5)
    assert sol.status == TIMED_OUT and sol.is_exact_cover()


def test_branch_and_bound_with_and_without_cost_bound():
    for seed in range(5):
        inst = generate_instance(12, 30, seed)
        pool, d = enumerate_exact(build_graph(inst), inst)
        assert solve_partition(pool).drones == solve_partition(pool, inst=inst).drones == d


def test_exact_limits():
    inst = generate_instance(21, 30, 0)
    with pytest.raises(TooLarge):
        enumerate_exact(build_graph(inst), inst)
    bad = make_instance([(0, 1), (2, 3)], [5, 1], 4)
    with pytest.raises(ValueError):
        enumerate_exact(build_graph(bad), bad)


def test_baseline_single_drone():
    inst = make_instance([(0, 1), (2, 3), (4, 5)], [1, 1, 1], 3)
    sol = greedy_baseline(build_graph(inst), inst)
    assert sol.drones == 1 and sol.meta["splits"] == 0


@pytest.mark.parametrize("seed", range(10))
def test_baseline_colours_equal_overlap_depth(seed):
    inst = generate_instance(40, 30, seed)
    g = build_graph(inst)
    sol = greedy_baseline(g, inst)
    assert sol.meta["colours"] == max_overlap_depth(inst)
    assert sol.is_exact_cover()
    for m in sol.selected_sets:
        assert is_independent_set(g, m) and inst.set_cost_units(m) <= inst.battery_units


@pytest.mark.parametrize("seed", range(10))
def test_baseline_never_beats_exact(seed):
    inst = generate_instance(15, [30, 40, 50, 60][seed % 4], seed)
    g = build_graph(inst)
    _, d = enumerate_exact(g, inst)
    base = greedy_baseline(g, inst)
    assert base.drones >= d
    if base.meta["splits"] == 0:
        assert base.drones == d


def test_baseline_split_rule():
    # disjoint windows, total 9 over B=5: ties spill the lowest id first, twice,
    # and the spilled class {0, 1} is split again
    inst = make_instance([(0, 1), (2, 3), (4, 5)], [3, 3, 3], 5)
    sol = greedy_baseline(build_graph(inst), inst)
    assert sol.selected_sets == [0b100, 0b010, 0b001]
    assert sol.meta["splits"] == 2


@pytest.mark.parametrize("d, d_exact, rho, delta", [(5, 5, 1, 0), (12, 11, Fraction(12, 11), 1),
                                                    (23, 19, Fraction(23, 19), 4)])
def test_metrics(d, d_exact, rho, delta):
    assert metrics(d, d_exact) == (rho, delta)


def test_metric_rounding():
    assert round(float(metrics(12, 11)[0]), 2) == 1.09
    assert round(float(metrics(23, 19)[0]), 2) == 1.21
    with pytest.raises(DivisionByZeroGuard):
        metrics(3, 0)


def test_lower_bound():
    inst = make_instance([(0, 10), (5, 15), (20, 30)], [10, 10, 25], 20)
    assert lower_bound(inst) == 3
    inst = make_instance([(0, 10), (5, 15), (9, 30)], [1, 1, 1], 20)
    assert lower_bound(inst) == 3


def test_solution_file(tmp_path):
    sol = solve_partition(FeasiblePool(4, [0b0011, 0b1100] + singletons(4)))
    save_solution(sol, tmp_path / "s.json")
    back = load_solution(tmp_path / "s.json")
    assert back.selected_sets == sol.selected_sets and back.drones == 2
    assert set(sol.to_dict()) == {"drones", "sets", "status", "wall_time_ms"}
    assert sol.labels() == [0, 0, 1, 1]


def test_deterministic_tie_break():
    # two optimal covers; the heavier, then lexicographically first bitstring is branched first
    pool = FeasiblePool(4, [0b0011, 0b1100, 0b0101, 0b1010] + singletons(4))
    sets = solve_partition(pool).selected_sets
    assert sorted(sets) == sorted(solve_partition(pool).selected_sets)
    assert 0b0101 in sets
