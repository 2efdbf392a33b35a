import math
import random
import re

import numpy as np
import pytest

from afc.baselines import build_slope_intercept
from afc.emitter import (
    PlaParseError,
    emit_pla,
    emit_rom_verilog,
    emit_testbench,
    emit_verilog,
    golden_vectors,
    parse_pla,
    wrapper_ports,
)
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import Cube, PlaCover, multi_output_minimize
from afc.netlist import PlaNetlist
from afc.tabulator import ALL_CONVENTIONS, build_table, reference_codes
from afc.vsim import VerilogSubsetError, parse_modules, run_vectors, simulate

U13, U16, U23, U17 = (FixedPointFormat.parse(s) for s in ("U1.3", "U1.6", "U2.3", "U1.7"))


def _net(kind, i, o, conv=None, **kw):
    t = build_table(ActivationSpec(kind), i, o, conv) if conv else build_table(ActivationSpec(kind), i, o, **kw)
    return PlaNetlist.from_cover(multi_output_minimize(t), t.name, t)


def random_cover(rng, n_in, n_out):
    rows = []
    for _ in range(rng.randint(0, 12)):
        s = "".join(rng.choice("01-") for _ in range(n_in))
        rows.append((Cube.from_string(s), {j for j in range(n_out) if rng.random() < 0.5}))
    return PlaCover.build(n_in, n_out, rows)


# -- PLA -------------------------------------------------------------------


def test_xor_pla_text():
    cover = PlaCover.build(2, 1, [(Cube.from_string("01"), {0}), (Cube.from_string("10"), {0})])
    assert emit_pla(cover) == ".i 2\n.o 1\n.p 2\n01 1\n10 1\n.e"


def test_output_columns_msb_first():
    cover = PlaCover.build(3, 2, [(Cube.from_string("1-0"), {1})])
    assert emit_pla(cover).splitlines()[3] == "1-0 10"


def test_roundtrip_random_covers():
    rng = random.Random(7)
    for _ in range(100):
        cover = random_cover(rng, rng.randint(1, 8), rng.randint(1, 6))
        assert parse_pla(emit_pla(cover)) == cover


def test_parse_accepts_comments_and_labels():
    text = "# made by hand\n.i 2\n.o 1\n.ilb a b\n.ob y\n.type f\n.p 1\n11 1  # and\n.end\n"
    cover = parse_pla(text)
    assert [str(c) for c in cover.products] == ["11"]


@pytest.mark.parametrize(
    "text,line",
    [
        (".i 2\n.o 1\n.x\n", 3),
        ("11 1\n.i 2\n.o 1\n", 1),
        (".i 2\n.o 1\n1x 1\n", 3),
        (".i 2\n.o 1\n11 2\n", 3),
        (".i 2\n.o 1\n.p 2\n11 1\n", 0),
        (".i 2\n.o 1\n.e\n11 1\n", 4),
        (".i two\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(PlaParseError) as e:
        parse_pla(text)
    assert e.value.line_no == line


# -- Verilog, checked by simulation ------------------------------------------


@pytest.mark.parametrize("conv", ALL_CONVENTIONS, ids=str)
@pytest.mark.parametrize("kind,i,o", [("tanh", U13, U16), ("selu", U23, U17), ("elu", U23, U17), ("sigmoid", U13, U16)])
def test_verilog_matches_reference(kind, i, o, conv):
    net = _net(kind, i, o, conv)
    text = emit_verilog(net)
    assert run_vectors(text, f"{net.name}_core", golden_vectors(net)) == []
    assert run_vectors(text, net.name, golden_vectors(net, wrapper=True)) == []


def test_wrapper_ports_tanh():
    net = _net("tanh", U13, U16)
    p = wrapper_ports(net.table)
    # sign + 1 integer + 2 guard + 3 fraction bits in; 64 needs 7 bits plus sign out
    assert (p.in_width, p.in_frac, p.out_width, p.out_frac) == (7, 3, 8, 6)
    assert p.input_value(0b1111111) == -0.125
    assert p.to_pattern(-64) == 192


def test_wrapper_vectors_cover_saturation_and_sign():
    net = _net("tanh", U13, U16)
    vecs = dict(golden_vectors(net, wrapper=True))
    p = wrapper_ports(net.table)
    assert vecs[16] == 64  # +2.0 saturates
    assert vecs[(1 << 7) - 16] == p.to_pattern(-64)  # -2.0
    assert vecs[3] == 23 and vecs[(1 << 7) - 3] == p.to_pattern(-23)


def test_selu_linear_branch_in_wrapper():
    net = _net("selu", U23, U17)
    text = emit_verilog(net)
    mods = parse_modules(text)
    for code in (1, 8, 37, 63):
        expected = math.floor(code / 8 * 134 + 0.5)
        assert simulate(mods, net.name, {"x": code})["y"] == expected


def test_unfolded_wrapper_refused():
    t = build_table(ActivationSpec("selu"), U23, U17, folded=False)
    net = PlaNetlist.from_cover(multi_output_minimize(t), t.name, t)
    with pytest.raises(ValueError):
        emit_verilog(net)


def test_core_only_without_table():
    net = PlaNetlist.from_cover(PlaCover.build(2, 1, [(Cube.from_string("11"), {0})]), "and2")
    text = emit_verilog(net)
    assert "module and2_core" in text and "module and2 (" not in text
    assert run_vectors(text, "and2_core", [(0, 0), (1, 0), (2, 0), (3, 1)]) == []


def test_testbench_embeds_all_vectors():
    net = _net("tanh", U13, U16)
    tb = emit_testbench(net)
    assert len(re.findall(r"golden\[\d+\] = ", tb)) == 16
    assert "golden[5] = 7'd35;" in tb
    tbw = emit_testbench(net, wrapper=True)
    assert f"module {net.name}_tb" in tbw and len(re.findall(r"golden\[\d+\] = ", tbw)) == 128


def test_rom_values_case_arms():
    t = build_table(ActivationSpec("tanh"), U13, U16)
    text = emit_rom_verilog(t, "values")
    arms = [ln.strip() for ln in text.splitlines() if ": y <=" in ln]
    assert len(arms) == 16
    assert arms[4] == "4'd4: y <= 7'd30;"
    assert "posedge clk" in text
    with pytest.raises(ValueError):
        emit_rom_verilog(t, "other")


def test_rom_kb_words():
    t = build_table(ActivationSpec("tanh"), U13, U16)
    si = build_slope_intercept(t)
    text = emit_rom_verilog(t, "slope_intercept", slope_intercept=si)
    assert text.count("k <= ") == 16
    assert "x_q" in text


def test_secant_words_oracle():
    t = build_table(ActivationSpec("tanh"), U13, U16)
    si = build_slope_intercept(t, "secant")
    for c in range(16):
        a, b = c / 8, (c + 1) / 8
        k = (math.tanh(b) - math.tanh(a)) / (b - a)
        assert si.k[c] == pytest.approx(k, rel=1e-12)
        assert si.b[c] == pytest.approx(math.tanh(a) - k * a, abs=1e-12)
        assert si.k_codes[c] == math.floor(k * 64 + 0.5)


# -- simulator -------------------------------------------------------------


def test_vsim_precedence_and_selects():
    text = """
    module m (input wire [3:0] x, output wire [7:0] y);
        wire [7:0] a = x + 2 * 3;
        wire [7:0] b = a << 1 | 1;
        assign y = x[3] ? b : {7'd0, 1'b0} ;
    endmodule
    """
    with pytest.raises(VerilogSubsetError):
        parse_modules(text)  # concatenation is outside the subset
    text = text.replace("{7'd0, 1'b0}", "8'd0")
    mods = parse_modules(text)
    assert simulate(mods, "m", {"x": 9})["y"] == ((9 + 6) << 1) | 1
    assert simulate(mods, "m", {"x": 3})["y"] == 0


def test_vsim_masks_to_width():
    text = "module m (input wire [3:0] x, output wire [3:0] y);\n wire [3:0] n = ~x + 4'd1;\n assign y = n;\nendmodule"
    assert run_vectors(text, "m", [(1, 15), (0, 0), (8, 8)]) == []


def test_vsim_rejects_sequential():
    with pytest.raises(VerilogSubsetError):
        parse_modules("module m (input wire clk, output wire y);\n always @(posedge clk) y <= 1;\nendmodule")
    with pytest.raises(VerilogSubsetError):
        parse_modules("wire a;")
