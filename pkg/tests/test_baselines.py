import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from afc import baselines
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import multi_output_minimize
from afc.netlist import PlaNetlist
from afc.tabulator import ALL_CONVENTIONS, build_table, reference_eval_array

U13, U16, U23, U17 = (FixedPointFormat.parse(s) for s in ("U1.3", "U1.6", "U2.3", "U1.7"))
TANH, SELU = ActivationSpec("tanh"), ActivationSpec("selu")
X = np.linspace(-4.5, 4.5, 2001)


@pytest.mark.parametrize("conv", ALL_CONVENTIONS, ids=str)
def test_combinational_equals_rom_y(conv):
    for f, i, o in ((TANH, U13, U16), (SELU, U23, U17)):
        t = build_table(f, i, o, conv)
        net = PlaNetlist.from_cover(multi_output_minimize(t), t.name, t)
        assert np.array_equal(baselines.combinational(net, t)(X), baselines.rom_y(t)(X))


def test_rom_y_is_reference_model():
    t = build_table(TANH, U13, U16)
    assert np.array_equal(baselines.rom_y(t)(X), reference_eval_array(X, t))


@pytest.mark.parametrize("fit", ["secant", "lstsq"])
def test_rom_kb_more_accurate_than_rom_y(fit):
    for f, i, o in ((TANH, U13, U16), (SELU, U23, U17)):
        t = build_table(f, i, o)
        kb = baselines.rom_kb(t, fit)
        xs = np.linspace(-1.99, 1.99, 4001) if f.kind == "tanh" else np.linspace(-3.87, -0.001, 4001)
        err_kb = np.abs(kb(xs) - f(xs)).mean()
        err_y = np.abs(baselines.rom_y(t)(xs) - f(xs)).mean()
        assert err_kb < err_y


def test_rom_kb_output_on_grid_and_symmetric():
    t = build_table(TANH, U13, U16)
    kb = baselines.build_slope_intercept(t)
    y = kb(X)
    assert np.allclose(y * 64, np.round(y * 64))
    assert np.array_equal(kb(-X[X < 0]), -kb(X[X < 0]))
    assert kb.k_bits >= 1 and kb.b_bits >= 1
    with pytest.raises(ValueError):
        baselines.build_slope_intercept(t, "spline")


def test_taylor_series_forms():
    tay = baselines.taylor(TANH, 3)
    e = 1 + 1.0 + 0.5 + 1 / 6  # E(2 * 0.5)
    assert tay(np.array([0.5]))[0] == pytest.approx((e - 1) / (e + 1))
    assert tay(np.array([-0.5]))[0] == pytest.approx(-(e - 1) / (e + 1))
    assert np.all(np.abs(tay(X)) <= 1)
    sig = baselines.taylor(ActivationSpec("sigmoid"), 2)
    assert sig(np.array([0.0]))[0] == 0.5
    selu = baselines.taylor(SELU, 20)
    assert selu(np.array([-1.0]))[0] == pytest.approx(SELU(-1.0), rel=1e-12)
    assert selu(np.array([2.0]))[0] == pytest.approx(1.0507 * 2)


def test_pow2_forms():
    assert baselines.pow2_approx(ActivationSpec("exp"))(np.array([1.0]))[0] == pytest.approx(2**1.44)
    assert baselines.pow2_approx(TANH)(np.array([0.0]))[0] == 0.0
    assert baselines.pow2_approx(ActivationSpec("sigmoid"), 1.44)(np.array([0.0]))[0] == 0.5
    assert baselines.pow2_approx(SELU)(np.array([-1.0]))[0] == pytest.approx(1.0507 * 1.6733 * (2**-1.44 - 1))


def test_taylor5_lut_hybrid():
    t = build_table(TANH, U13, U16)
    h = baselines.taylor5_lut(t)
    assert h(np.array([0.2]))[0] == 0.2
    assert h(np.array([-3.0]))[0] == -1.0
    assert h(np.array([1.0]))[0] == reference_eval_array(np.array([1.0]), t)[0]
    with pytest.raises(ValueError):
        baselines.taylor5_lut(build_table(SELU, U23, U17))


def test_uniform_luts_on_knots():
    lut = baselines.uniform_lut(np.exp, -1.0, 1.0, 16)
    sec = baselines.uniform_secant(np.exp, -1.0, 1.0, 16)
    knots = -1.0 + np.arange(16) * 0.125
    assert np.allclose(lut(knots), np.exp(knots))
    assert np.allclose(sec(knots), np.exp(knots))
    assert sec(np.array([1.0]))[0] == pytest.approx(math.e)


@given(st.integers(0, 1 << 20))
def test_csd_digits(v):
    digits = baselines.csd_digits(v)
    assert sum(d << s for s, d in digits) == v
    shifts = sorted(s for s, _ in digits)
    assert all(b - a >= 2 for a, b in zip(shifts, shifts[1:]))  # no two adjacent nonzero digits
    assert len(digits) <= bin(v).count("1")


def test_csd_examples():
    assert baselines.csd_digits(134) == [(7, 1), (3, 1), (1, -1)]
    assert baselines.csd_digits(0) == []
    with pytest.raises(ValueError):
        baselines.csd_digits(-3)


def test_gain_residual():
    t = build_table(SELU, U23, U17)
    assert baselines.gain_residual(t) == pytest.approx(134 / 128 - 1.0507)
