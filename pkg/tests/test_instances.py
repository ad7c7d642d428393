import json

import pytest

from ddpp.errors import GenerationExhausted, ParseError, SchemaVersionMismatch
from ddpp.instances import DdppInstance, generate_instance, load_instance, save_instance, to_ticks
from ddpp.schedgraph import build_graph

from conftest import make_instance


def test_generated_instance_postconditions():
    inst = generate_instance(8, 30, 42)
    assert inst.n == 8
    lengths = inst.windows[:, 1] - inst.windows[:, 0]
    assert ((lengths >= 5) & (lengths <= 15)).all()
    assert inst.windows.min() >= 0 and inst.windows.max() <= 7 * 8
    g = build_graph(inst)
    assert g.is_connected()
    assert max(g.degree(j) for j in range(g.n)) <= 5


@pytest.mark.parametrize("seed", range(10))
def test_two_delivery_costs_are_capped(seed):
    inst = generate_instance(2, 30, seed)
    assert inst.n == 2
    lengths = inst.windows[:, 1] - inst.windows[:, 0]
    assert ((lengths >= 5) & (lengths <= 14)).all()
    # log10 model: 1 <= W < 10**0.3
    assert (inst.costs >= lengths - 1e-6).all()
    assert (inst.costs < 10**0.3 * lengths).all()


@pytest.mark.parametrize("seed", range(10))
def test_natural_cost_factor_bound(seed):
    inst = generate_instance(6, 30, seed, cost_factor="natural")
    lengths = inst.windows[:, 1] - inst.windows[:, 0]
    assert (inst.costs < 0.3 * lengths + 1e-6).all()
    assert (inst.costs < 4.5).all()


def test_generation_is_deterministic():
    a = json.dumps(generate_instance(20, 40, 7).to_dict())
    b = json.dumps(generate_instance(20, 40, 7).to_dict())
    assert a == b
    assert a != json.dumps(generate_instance(20, 40, 8).to_dict())


def test_ids_follow_departure_order():
    inst = generate_instance(30, 40, 3)
    leaves = [d.leave_ticks for d in inst.deliveries]
    assert leaves == sorted(leaves)


@pytest.mark.parametrize("n", [5, 20, 50, 100])
def test_generation_caps_hold_at_scale(n):
    inst = generate_instance(n, 60, n)
    g = build_graph(inst)
    assert g.is_connected()
    assert max(g.degree(j) for j in range(n)) <= 5


def test_bad_generation_arguments():
    with pytest.raises(ValueError):
        generate_instance(1, 30, 0)
    with pytest.raises(ValueError):
        generate_instance(5, 0, 0)
    with pytest.raises(ValueError):
        generate_instance(5, 30, 0, cost_factor="cubic")
    with pytest.raises(GenerationExhausted):
        generate_instance(5, 30, 0, max_attempts=0)


def test_round_trip(tmp_path, inst8):
    path = tmp_path / "inst.json"
    save_instance(inst8, path)
    assert load_instance(path) == inst8


def _doc(rows, battery="30"):
    return {"version": 1, "battery": battery, "deliveries": rows}


def test_reversed_window_names_delivery():
    rows = [{"id": 0, "t_leave": 0, "t_return": 5, "cost": 1},
            {"id": 1, "t_leave": 9, "t_return": 4, "cost": 1}]
    with pytest.raises(ParseError, match="delivery 1"):
        DdppInstance.from_dict(_doc(rows))


def test_duplicate_ids_rejected():
    rows = [{"id": 0, "t_leave": 0, "t_return": 5, "cost": 1},
            {"id": 0, "t_leave": 6, "t_return": 9, "cost": 1}]
    with pytest.raises(ParseError, match="duplicate"):
        DdppInstance.from_dict(_doc(rows))


@pytest.mark.parametrize("doc, err", [
    ({"version": 2, "battery": "1", "deliveries": []}, SchemaVersionMismatch),
    ({"version": 1, "deliveries": []}, ParseError),
    (_doc([{"id": 0, "t_leave": 0, "t_return": 5}]), ParseError),
    (_doc([{"id": 0, "t_leave": 0, "t_return": 5, "cost": -1}]), ParseError),
    (_doc([{"id": 1, "t_leave": 0, "t_return": 5, "cost": 1}]), ParseError),
    (_doc([{"id": 0, "t_leave": "0.0001", "t_return": 5, "cost": 1}]), ParseError),
    (_doc([], battery="0"), ParseError),
    ([1, 2], ParseError),
])
def test_malformed_documents(doc, err):
    with pytest.raises(err):
        DdppInstance.from_dict(doc)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,\n "battery": }')
    with pytest.raises(ParseError, match="line 2"):
        load_instance(path)


def test_fixed_point_views():
    inst = make_instance([("0.5", "10.25")], ["1.125"], "30")
    d = inst.deliveries[0]
    assert (d.leave_ticks, d.return_ticks) == (500, 10250)
    assert inst.costs[0] == pytest.approx(1.125)
    assert to_ticks("1.001") == 1001


def test_feasible_as_given_flag():
    assert make_instance([(0, 5), (6, 9)], [3, 4], 4).feasible_as_given
    assert not make_instance([(0, 5), (6, 9)], [3, 5], 4).feasible_as_given


def test_target_weight():
    inst = make_instance([(0, 5), (6, 9), (10, 12)], [1, 2, 3], 12)
    assert inst.target_weight() == pytest.approx(12 * 3 / 6)
