import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afc import analyzer, kernels
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.tabulator import ALL_CONVENTIONS, SamplingConvention

U13, U16, U23, U17 = (FixedPointFormat.parse(s) for s in ("U1.3", "U1.6", "U2.3", "U1.7"))
TANH, SELU = ActivationSpec("tanh"), ActivationSpec("selu")
CASES = [(TANH, U13, U16), (SELU, U23, U17)]


def test_default_intervals():
    assert analyzer.default_interval(TANH, U13) == (-2.0, 2.0)
    assert analyzer.default_interval(SELU, U23) == (-3.875, 0.0)
    assert analyzer.default_interval(ActivationSpec("sigmoid"), U13) == (0.0, 2.0)


def test_sample_points_are_midpoints():
    x = analyzer.sample_points((0.0, 1.0), 4)
    assert np.allclose(x, [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(ValueError):
        analyzer.sample_points((0.0, 1.0), 0)


def test_average_error_known_value():
    # |x - 0| on (0, 1) has mean 1/2
    assert analyzer.average_error(lambda x: x, lambda x: 0 * x, (0.0, 1.0), 1000) == pytest.approx(50.0)


@pytest.mark.parametrize("f,i,o", CASES, ids=["tanh", "selu"])
def test_exact_method_has_zero_error(f, i, o):
    cmp = analyzer.compare_methods(f, i, o, ["exact"], n=5000)
    assert cmp.reports[0].average_error_percent == 0.0


@pytest.mark.parametrize("f,i,o", CASES, ids=["tanh", "selu"])
def test_combinational_matches_rom_y_and_rom_kb_is_better(f, i, o):
    cmp = analyzer.compare_methods(f, i, o, ["combinational", "rom_y", "rom_kb"], n=20000)
    ae = {r.method: r.average_error_percent for r in cmp.reports}
    assert ae["combinational"] == ae["rom_y"]
    assert ae["rom_kb"] < ae["rom_y"]
    areas = {r.method: r.cost.gate_equiv_area for r in cmp.reports}
    assert areas["combinational"] < areas["rom_y"] < areas["rom_kb"]


def test_default_methods():
    assert "taylor5_lut" in analyzer.default_methods(TANH)
    assert "taylor5_lut" not in analyzer.default_methods(SELU)
    with pytest.raises(ValueError):
        analyzer.build_method("cordic", TANH, U13, U16)


def test_sweep_six_rows_sorted():
    rows = analyzer.convention_sweep(TANH, U13, U16, 4.19, n=20000)
    assert len(rows) == 6
    assert {str(r.convention) for r in rows} == {str(c) for c in ALL_CONVENTIONS}
    d = [r.distance for r in rows]
    assert d == sorted(d)
    assert all(r.distance == pytest.approx(abs(r.average_error_percent - 4.19)) for r in rows)


def test_sweep_without_quantization_is_zero():
    rows = analyzer.convention_sweep(SELU, U23, U17, 2.22, n=5000, quantize=False)
    assert all(r.average_error_percent == 0.0 for r in rows)


def test_floor_is_not_better_than_round_on_tanh():
    rows = {str(r.convention): r.average_error_percent for r in analyzer.convention_sweep(TANH, U13, U16, 0.0, n=20000)}
    assert rows[str(SamplingConvention("left_edge", "floor"))] >= rows[str(SamplingConvention("left_edge", "round"))]


@pytest.mark.parametrize("f,i,o", CASES, ids=["tanh", "selu"])
def test_sample_count_converged(f, i, o):
    a = analyzer.compare_methods(f, i, o, ["rom_y"], n=100_000).reports[0].average_error_percent
    b = analyzer.compare_methods(f, i, o, ["rom_y"], n=200_000).reports[0].average_error_percent
    assert abs(a - b) < 0.05


@settings(max_examples=20)
@given(st.randoms(use_true_random=False))
def test_average_error_permutation_invariant(rnd):
    rng = np.random.default_rng(rnd.randint(0, 2**31))
    a, b = rng.normal(size=500), rng.normal(size=500)
    perm = rng.permutation(500)

    assert kernels.mean_abs_error(a[perm], b[perm]) == pytest.approx(kernels.mean_abs_error(a, b), rel=1e-14)


def test_error_nonincreasing_with_input_bits():
    aes = []
    for frac in (2, 3, 4):
        i = FixedPointFormat(1, frac)
        cmp = analyzer.compare_methods(TANH, i, FixedPointFormat(1, 10), ["rom_y"], interval=(-2.0, 2.0), n=20000,
                                       convention=SamplingConvention("midpoint", "round"))
        aes.append(cmp.reports[0].average_error_percent)
    assert aes[0] > aes[1] > aes[2]


def test_exp_curves_pow2_beats_value_lut():
    cmp = analyzer.exp_curves()
    mx = {r.method: r.max_error for r in cmp.reports}
    assert mx["pow2_approx"] < mx["rom_y"]
    assert mx["rom_kb"] < mx["rom_y"]


def test_table_csv_parses():
    cmp = analyzer.compare_methods(TANH, U13, U16, ["combinational", "rom_y", "taylor"], n=2000, curve_points=11)
    text = cmp.table_csv("# header line")
    lines = text.splitlines()
    assert lines[0] == "# header line"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert [r["method"] for r in rows] == ["combinational", "rom_y", "taylor"]
    assert rows[0]["area_ratio"] == "1.000"
    assert float(rows[1]["area_ratio"]) > 1
    assert rows[2]["area_ratio"] == ""
    curve = list(csv.reader(io.StringIO(cmp.curve_csv())))
    assert curve[0] == ["x", "exact", "combinational", "rom_y", "taylor", "err_combinational", "err_rom_y", "err_taylor"]
    assert len(curve) == 12
    row = [float(v) for v in curve[1]]
    assert row[5] == pytest.approx(row[2] - row[1])


def test_sweep_csv_marks_best():
    rows = analyzer.convention_sweep(SELU, U23, U17, 2.22, n=5000)
    parsed = list(csv.DictReader(io.StringIO(analyzer.sweep_csv(rows))))
    assert [p["best"] for p in parsed] == ["1"] + ["0"] * 5
    assert parsed[0]["convention"] == str(rows[0].convention)


def test_methods_without_cost_leave_columns_blank():
    parsed = list(csv.DictReader(io.StringIO(analyzer.exp_curves(n=11).table_csv())))
    assert all(r["gate_equiv_area"] == "" and r["clock_cycles"] == "" for r in parsed)
