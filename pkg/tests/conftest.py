import itertools

import pytest

from ddpp.instances import DdppInstance, generate_instance
from ddpp.schedgraph import SchedGraph, build_graph


def make_instance(windows, costs=None, battery=30):
    costs = costs if costs is not None else [1] * len(windows)
    return DdppInstance.from_minutes(windows, costs, battery)


def complete_graph(n):
    return SchedGraph.from_edges(n, itertools.combinations(range(n), 2))


def path_graph(n):
    return SchedGraph.from_edges(n, [(j, j + 1) for j in range(n - 1)])


def brute_independent(g, mask):
    ids = [j for j in range(g.n) if mask >> j & 1]
    return all(not g.has_edge(i, j) for i, j in itertools.combinations(ids, 2))


@pytest.fixture(scope="session")
def inst8():
    return generate_instance(8, 30, 42)


@pytest.fixture(scope="session")
def graph8(inst8):
    return build_graph(inst8)
