import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import Cube, PlaCover, minimize_columns, multi_output_minimize
from afc.netlist import CostReport, PlaNetlist, cost, cost_csv, cost_table, rom_cost
from afc.tabulator import ALL_CONVENTIONS, build_table

U13, U16, U23, U17 = (FixedPointFormat.parse(s) for s in ("U1.3", "U1.6", "U2.3", "U1.7"))

# Reference 4-input tanh design: literal count of each product p1..p19 and the
# products feeding Y6..Y0.  Literal polarities are not part of this
# transcription, so every literal is taken positive here.
REF_TANH_PRODUCT_INPUTS = [
    {3}, {2, 0}, {2, 1}, {2, 1, 0}, {2, 1, 0}, {3, 2}, {3, 1, 0}, {3, 1, 0}, {3, 2, 1, 0}, {3, 2, 0},
    {3, 2, 1}, {3, 1, 0}, {2, 1, 0}, {3, 2, 1, 0}, {1, 0}, {2, 1}, {3, 2, 1, 0}, {3, 1, 0}, {3, 2, 1},
]
REF_TANH_OR = {
    6: [3, 2, 1], 5: [5, 4, 1], 4: [8, 7, 6, 3, 2], 3: [14, 13, 12, 11, 10, 9, 7],
    2: [15, 11, 10, 5], 1: [17, 16, 15, 2], 0: [19, 18, 11, 8, 4],
}


def _ref_netlist():
    products = tuple(Cube(sum(1 << i for i in s), sum(1 << i for i in s), 4) for s in REF_TANH_PRODUCT_INPUTS)
    outputs = tuple(tuple(p - 1 for p in REF_TANH_OR[j]) for j in range(7))
    return PlaNetlist("ref", 4, 7, products, outputs)


def test_reference_design_cost_by_hand():
    r = cost(_ref_netlist())
    # 53 literals over 19 products -> 34 AND gates; 31 OR inputs over 7 outputs -> 24 OR gates
    assert (r.product_count, r.literal_count, r.or_input_count) == (19, 53, 31)
    assert r.gate_equiv_area == 58.0
    assert r.depth_levels == 2 + 3
    assert r.clock_cycles == 0


def test_xor_cost_by_hand():
    net = PlaNetlist("x", 2, 1, (Cube.from_string("01"), Cube.from_string("10")), ((0, 1),))
    r = cost(net)
    # two 2-input ANDs, one 2-input OR, two input inverters
    assert r.gate_equiv_area == 5.0
    assert r.depth_levels == 2
    assert net.eval_all().tolist() == [0, 1, 1, 0]


@pytest.mark.parametrize("conv", ALL_CONVENTIONS, ids=str)
@pytest.mark.parametrize("kind,i,o", [("tanh", U13, U16), ("selu", U23, U17)])
def test_netlist_equals_table_exhaustively(kind, i, o, conv):
    t = build_table(ActivationSpec(kind), i, o, conv)
    net = PlaNetlist.from_cover(multi_output_minimize(t), t.name, t)
    assert net.eval_all().tolist() == t.entries.tolist()
    assert [net.eval(c) for c in range(1 << t.n_in)] == t.entries.tolist()


@given(st.lists(st.integers(0, 7), min_size=8, max_size=8))
def test_eval_paths_agree(entries):
    net = PlaNetlist.from_cover(minimize_columns(entries, 3, 3), "f")
    assert net.eval_all().tolist() == entries
    assert net.eval_many([7, 0, 3]).tolist() == [entries[7], entries[0], entries[3]]
    assert net.to_cover().evaluate_all().tolist() == entries


def test_netlist_validation():
    a = Cube.from_string("1-")
    with pytest.raises(ValueError):
        PlaNetlist("n", 2, 1, (a,), ((1,),))
    with pytest.raises(ValueError):
        PlaNetlist("n", 2, 1, (a, Cube.from_string("-1")), ((0,),))
    net = PlaNetlist("n", 2, 1, (a,), ((0,),))
    with pytest.raises(ValueError):
        net.eval(4)


def test_from_cover_drops_unused_products():
    a, b = Cube.from_string("1-"), Cube.from_string("-1")
    cover = PlaCover(2, 1, (b, a), ((1,),))
    net = PlaNetlist.from_cover(cover, "n")
    assert net.products == (a,) and net.outputs == ((0,),)


def test_rom_costs_by_hand():
    tanh = build_table(ActivationSpec("tanh"), U13, U16)
    selu = build_table(ActivationSpec("selu"), U23, U17)
    y = rom_cost(tanh, "values")
    # 32 rows (minimum macro) x 7 bits; 0.5 GE per bit + 32*4 decoder + 7 output flops
    assert y.rom_bits == 224
    assert y.gate_equiv_area == 112 + 128 + 42
    assert y.clock_cycles == 1
    assert rom_cost(selu, "values").rom_bits == 256
    kb = rom_cost(tanh, "slope_intercept")
    assert kb.rom_bits == 448 and kb.clock_cycles == 2
    with pytest.raises(ValueError):
        rom_cost(tanh, "flash")


@pytest.mark.parametrize("kind,i,o", [("tanh", U13, U16), ("selu", U23, U17)])
def test_combinational_smaller_than_rom(kind, i, o):
    t = build_table(ActivationSpec(kind), i, o)
    comb = cost(PlaNetlist.from_cover(multi_output_minimize(t), t.name, t))
    assert comb.gate_equiv_area < rom_cost(t, "values").gate_equiv_area < rom_cost(t, "slope_intercept").gate_equiv_area


def test_cost_outputs():
    reports = [CostReport("combinational", 3, 5, 4, 6.0), CostReport("rom_y", rom_bits=224, gate_equiv_area=12.0, clock_cycles=1)]
    text = cost_csv(reports, "# h")
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    assert rows[1]["rom_bits"] == "224" and rows[0]["product_count"] == "3"
    table = cost_table(reports)
    assert "area_ratio" in table.splitlines()[0]
    assert table.splitlines()[2].split()[-1] == "2.00"
