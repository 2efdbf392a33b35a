"""Approximation baselines the combinational circuit is compared against.

Every method is exposed as a callable ``x -> approx(x)`` over numpy arrays so
the error analyzer can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from afc import funcref
from afc.funcref import ActivationSpec
from afc.netlist import PlaNetlist
from afc.tabulator import DomainPoint, QuantizedFunctionTable, RangeMode, RegionKind, magnitude_function, reference_eval_array

Method = Callable[[np.ndarray], np.ndarray]

METHODS = ("exact", "combinational", "rom_y", "rom_kb", "taylor", "pow2_approx", "taylor5_lut")


def wrap_codes(x, mag_codes, table: QuantizedFunctionTable) -> np.ndarray:
    """Apply the table's region wrapper to per-sample magnitude codes."""
    x = np.asarray(x, dtype=np.float64)
    mag = np.asarray(mag_codes, dtype=np.int64)
    sat_lo, sat_hi = table.saturation_codes()
    region = table.region
    if region.kind is RegionKind.NEGATIVE_EXP_SATURATING:
        if not table.folded:
            mag = np.floor(mag * table.gain_code / table.out_fmt.scale + 0.5).astype(np.int64)
        lin = np.floor(x * table.gain_code + 0.5).astype(np.int64)
        out = np.where(x < 0, -mag, lin)
        return np.where(x <= region.lo, sat_lo, out)
    if region.kind is RegionKind.CUSTOM:
        return np.where(x >= region.hi, sat_hi, mag)
    out = np.where(x < 0, -mag, mag)
    out = np.where(x >= region.hi, sat_hi, out)
    return np.where(x <= region.lo, sat_lo, out)


def table_magnitudes(x, table: QuantizedFunctionTable) -> np.ndarray:
    """Input magnitude seen by the table for each sample."""
    x = np.asarray(x, dtype=np.float64)
    if table.region.kind is RegionKind.NEGATIVE_EXP_SATURATING:
        return np.where(x < 0, -x, 0.0)
    if table.region.kind is RegionKind.CUSTOM:
        return np.maximum(x, 0.0)
    return np.abs(x)


def segment_index(t, table: QuantizedFunctionTable) -> np.ndarray:
    scaled = np.asarray(t, dtype=np.float64) / table.in_fmt.step
    idx = np.floor(scaled)
    if table.convention.domain_point is DomainPoint.NEAREST_GRID:
        idx = idx + ((scaled - idx) >= 0.5)
    return np.clip(idx, 0, table.in_fmt.max_code).astype(np.int64)


def _quantize_array(v, scale: int, mode: RangeMode) -> np.ndarray:
    s = np.asarray(v, dtype=np.float64) * scale
    f = np.floor(s)
    if mode is RangeMode.ROUND:
        f = f + ((s - f) >= 0.5)
    return f.astype(np.int64)


# -- ROM_y / combinational -------------------------------------------------


def rom_y(table: QuantizedFunctionTable) -> Method:
    """Function-value LUT read through the region wrapper."""
    return lambda x: reference_eval_array(x, table)


def combinational(netlist: PlaNetlist, table: QuantizedFunctionTable) -> Method:
    """The minimized circuit: table entries recomputed from the AND/OR planes."""
    circuit_table = table.with_entries(netlist.eval_all())
    return lambda x: reference_eval_array(x, circuit_table)


# -- ROM_kb ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SlopeInterceptTable:
    """Per-segment line ``y = k t + b`` over the table's input magnitude.

    ``k_codes``/``b_codes`` are signed integers in units of ``2**-k_frac`` and
    ``2**-b_frac``.
    """

    table: QuantizedFunctionTable
    k: np.ndarray
    b: np.ndarray
    k_codes: np.ndarray
    b_codes: np.ndarray
    k_frac: int
    b_frac: int
    fit: str

    @property
    def k_bits(self) -> int:
        return _signed_width(self.k_codes)

    @property
    def b_bits(self) -> int:
        return _signed_width(self.b_codes)

    def magnitude_codes(self, t) -> np.ndarray:
        idx = segment_index(t, self.table)
        kq = self.k_codes[idx] * 2.0 ** -self.k_frac
        bq = self.b_codes[idx] * 2.0 ** -self.b_frac
        y = kq * np.asarray(t, dtype=np.float64) + bq
        codes = _quantize_array(np.maximum(y, 0.0), self.table.out_fmt.scale, self.table.convention.range_mode)
        return np.minimum(codes, self.table.out_fmt.max_code)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        mag = self.magnitude_codes(table_magnitudes(x, self.table))
        return wrap_codes(x, mag, self.table) * self.table.out_fmt.step


def _signed_width(codes: np.ndarray) -> int:
    lo, hi = int(codes.min()), int(codes.max())
    need = max(hi.bit_length(), (-lo).bit_length() if lo < 0 else 0)
    return need + (1 if lo < 0 else 0)


def build_slope_intercept(
    table: QuantizedFunctionTable,
    fit: str = "secant",
    k_frac: int | None = None,
    b_frac: int | None = None,
    samples_per_segment: int = 64,
) -> SlopeInterceptTable:
    """Slope/intercept words for each input segment.

    ``secant`` draws the line through the segment end points;
    ``lstsq`` fits it to dense samples of the segment.
    """
    mag = magnitude_function(table.activation, table.folded)
    step = table.in_fmt.step
    n_seg = 1 << table.n_in
    left = np.arange(n_seg) * step
    if table.convention.domain_point is DomainPoint.NEAREST_GRID:
        left = np.maximum(left - step / 2, 0.0)
    right = (np.arange(n_seg) + (0.5 if table.convention.domain_point is DomainPoint.NEAREST_GRID else 1.0)) * step
    if fit == "secant":
        fl = np.asarray(mag(left), dtype=np.float64)
        fr = np.asarray(mag(right), dtype=np.float64)
        k = (fr - fl) / (right - left)
        b = fl - k * left
    elif fit == "lstsq":
        k = np.empty(n_seg)
        b = np.empty(n_seg)
        for c in range(n_seg):
            t = np.linspace(left[c], right[c], samples_per_segment, endpoint=False)
            t = t + (right[c] - left[c]) / (2 * samples_per_segment)
            k[c], b[c] = np.polyfit(t, mag(t), 1)
    else:
        raise ValueError(f"unknown fit {fit!r}")
    k_frac = table.out_fmt.frac_bits if k_frac is None else k_frac
    b_frac = table.out_fmt.frac_bits if b_frac is None else b_frac
    k_codes = np.floor(k * 2**k_frac + 0.5).astype(np.int64)
    b_codes = np.floor(b * 2**b_frac + 0.5).astype(np.int64)
    return SlopeInterceptTable(table, k, b, k_codes, b_codes, k_frac, b_frac, fit)


def rom_kb(table: QuantizedFunctionTable, fit: str = "secant", k_frac: int | None = None, b_frac: int | None = None) -> Method:
    return build_slope_intercept(table, fit, k_frac, b_frac)


# -- closed-form approximations --------------------------------------------


def taylor(f: ActivationSpec, order: int = 3) -> Method:
    """Truncated Taylor series of e^x about 0, substituted into ``f``."""

    def E(v):
        return funcref.taylor_exp(v, order, 0.0)

    return _exp_substituted(f, E)


def pow2_approx(f: ActivationSpec, coeff: float | None = None) -> Method:
    """Power-of-two exponential: e^x ~ 2^(1.44 x); sigmoid/tanh use the 1.5 form by default."""
    if f.kind == "tanh":
        c = 1.5 if coeff is None else coeff
        return lambda x: np.asarray(funcref.tanh_pow2_approx(x, c), dtype=np.float64)
    if f.kind == "sigmoid":
        c = 1.5 if coeff is None else coeff
        return lambda x: np.asarray(funcref.sigmoid_pow2_approx(x, c), dtype=np.float64)
    c = 1.44 if coeff is None else coeff
    return _exp_substituted(f, lambda v: funcref.exp_pow2_approx(v, c))


def _exp_substituted(f: ActivationSpec, E) -> Method:
    if f.kind == "exp":
        return lambda x: np.asarray(E(np.asarray(x, dtype=np.float64)), dtype=np.float64)
    if f.kind == "tanh":
        def tanh_m(x):
            x = np.asarray(x, dtype=np.float64)
            # odd extension; a positive series argument keeps E(.) > 0
            e = np.asarray(E(2.0 * np.abs(x)), dtype=np.float64)
            return np.sign(x) * (e - 1.0) / (e + 1.0)
        return tanh_m
    if f.kind == "sigmoid":
        return lambda x: 1.0 / (1.0 + np.asarray(E(-np.asarray(x, dtype=np.float64)), dtype=np.float64))
    if f.kind in ("elu", "selu"):
        lam = f.lam if f.kind == "selu" else 1.0

        def elu_m(x):
            x = np.asarray(x, dtype=np.float64)
            e = np.asarray(E(np.minimum(x, 0.0)), dtype=np.float64)
            return lam * np.where(x > 0, x, f.alpha * (e - 1.0))

        return elu_m
    raise ValueError(f"no exponential form for {f.kind} activations")


def taylor5_lut(table: QuantizedFunctionTable) -> Method:
    """tanh(x) ~ x for small |x|, the value LUT elsewhere."""
    if table.activation.kind != "tanh":
        raise ValueError("the Taylor/LUT hybrid is defined for tanh only")
    lut = rom_y(table)

    def hybrid(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(funcref.small_input(x), x, np.where(np.abs(x) > funcref.TAYLOR5_SATURATION, np.sign(x), lut(x)))

    return hybrid


def exact(f: ActivationSpec) -> Method:
    return lambda x: np.asarray(f(np.asarray(x, dtype=np.float64)), dtype=np.float64)


def uniform_lut(f: Callable, lo: float, hi: float, rows: int) -> Method:
    """Plain value LUT with ``rows`` equal segments over [lo, hi), sampled at left edges."""
    step = (hi - lo) / rows
    values = np.asarray(f(lo + np.arange(rows) * step), dtype=np.float64)

    def lut(x):
        idx = np.clip(np.floor((np.asarray(x, dtype=np.float64) - lo) / step), 0, rows - 1).astype(np.int64)
        return values[idx]

    return lut


def uniform_secant(f: Callable, lo: float, hi: float, rows: int) -> Method:
    """Slope/intercept LUT with ``rows`` secant segments over [lo, hi)."""
    step = (hi - lo) / rows
    left = lo + np.arange(rows) * step
    fl = np.asarray(f(left), dtype=np.float64)
    fr = np.asarray(f(left + step), dtype=np.float64)
    k = (fr - fl) / step
    b = fl - k * left

    def lut(x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.clip(np.floor((x - lo) / step), 0, rows - 1).astype(np.int64)
        return k[idx] * x + b[idx]

    return lut


def csd_digits(value: int) -> list[tuple[int, int]]:
    """Canonical signed-digit expansion as ``(shift, +1|-1)`` pairs, highest shift first."""
    if value < 0:
        raise ValueError("csd_digits expects a nonnegative integer")
    digits = []
    v = value
    shift = 0
    while v:
        if v & 1:
            d = 2 - (v & 3)  # +1 if v % 4 == 1, -1 if v % 4 == 3
            digits.append((shift, d))
            v -= d
        v >>= 1
        shift += 1
    return sorted(digits, reverse=True)


def gain_residual(table: QuantizedFunctionTable) -> float:
    """Scaling error of the quantized linear-branch gain."""
    return table.gain_code / table.out_fmt.scale - table.region.gain

