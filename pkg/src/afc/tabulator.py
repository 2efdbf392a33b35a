"""Quantized truth tables for activation functions and the bit-accurate wrapper model.

A table holds one output magnitude code per input magnitude code.  The
region wrapper around it (saturation, sign routing, the SELU linear branch)
is described by a :class:`RegionSpec` and modelled by :func:`reference_eval`.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from afc import kernels
from afc.fixed_point import FixedPointFormat, Rounding, decode
from afc.funcref import ActivationSpec


class DomainPoint(str, Enum):
    LEFT_EDGE = "left_edge"
    MIDPOINT = "midpoint"
    NEAREST_GRID = "nearest_grid"


class RangeMode(str, Enum):
    FLOOR = "floor"
    ROUND = "round"


@dataclass(frozen=True)
class SamplingConvention:
    """Where each input segment is sampled and how the result is quantized.

    ``left_edge`` and ``midpoint`` map a real input to its segment by
    truncation; ``nearest_grid`` rounds it to the closest grid code.
    """

    domain_point: DomainPoint = DomainPoint.LEFT_EDGE
    range_mode: RangeMode = RangeMode.ROUND

    def __post_init__(self):
        object.__setattr__(self, "domain_point", DomainPoint(self.domain_point))
        object.__setattr__(self, "range_mode", RangeMode(self.range_mode))

    @classmethod
    def parse(cls, text: str) -> "SamplingConvention":
        parts = [p.strip() for p in text.replace("/", ",").split(",")]
        if len(parts) != 2:
            raise ValueError(f"convention {text!r} must look like 'left_edge,round'")
        return cls(DomainPoint(parts[0]), RangeMode(parts[1]))

    def __str__(self) -> str:
        return f"{self.domain_point.value},{self.range_mode.value}"


DEFAULT_CONVENTION = SamplingConvention()
ALL_CONVENTIONS = tuple(SamplingConvention(d, r) for d in DomainPoint for r in RangeMode)


class RegionKind(str, Enum):
    ODD_SYMMETRIC_SATURATING = "odd_symmetric_saturating"
    NEGATIVE_EXP_SATURATING = "negative_exp_saturating"
    CUSTOM = "custom"


class Region(str, Enum):
    SATURATE_HI = "saturate_hi"
    SATURATE_LO = "saturate_lo"
    LINEAR_BRANCH = "linear_branch"
    TABLE_BRANCH = "table_branch"


@dataclass(frozen=True)
class RegionSpec:
    """Piecewise structure around the table.

    ``breakpoints`` is ordered ascending.  For odd-symmetric functions it is
    ``(-B, B)`` with saturations ``(-s, s)``; for the negative-exponential
    family it is ``(-B, 0)`` with a single low saturation; for ``custom`` it
    is ``(0, B)`` with a single high saturation (inputs below 0 clamp to 0).
    """

    kind: RegionKind
    breakpoints: tuple[float, ...]
    saturation: tuple[float, ...]
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        bp = tuple(float(b) for b in self.breakpoints)
        if any(b >= c for b, c in zip(bp, bp[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {bp}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "saturation", tuple(float(s) for s in self.saturation))

    @property
    def lo(self) -> float:
        return self.breakpoints[0]

    @property
    def hi(self) -> float:
        return self.breakpoints[-1]


def classify_region(x: float, spec: RegionSpec) -> Region:
    if spec.kind is RegionKind.ODD_SYMMETRIC_SATURATING:
        if x >= spec.hi:
            return Region.SATURATE_HI
        if x <= spec.lo:
            return Region.SATURATE_LO
        return Region.TABLE_BRANCH
    if spec.kind is RegionKind.NEGATIVE_EXP_SATURATING:
        if x >= 0:
            return Region.LINEAR_BRANCH
        if x <= spec.lo:
            return Region.SATURATE_LO
        return Region.TABLE_BRANCH
    if x >= spec.hi:
        return Region.SATURATE_HI
    return Region.TABLE_BRANCH


class TableRangeError(ValueError):
    """A quantized table value does not fit the output format."""

    def __init__(self, code: int, value: float, out_fmt: FixedPointFormat):
        self.code = code
        self.value = value
        super().__init__(f"input code {code}: value {value:.6g} exceeds output format {out_fmt} (max {out_fmt.max_value})")


def _quantize(v: float, out_fmt: FixedPointFormat, mode: RangeMode) -> int:
    s = v * out_fmt.scale
    f = math.floor(s)
    if mode is RangeMode.ROUND and s - f >= 0.5:
        f += 1
    return f


def region_for(f: ActivationSpec, in_fmt: FixedPointFormat, folded: bool = True) -> RegionSpec:
    """Default region wrapper for ``f`` when its table covers ``in_fmt``."""
    end = (in_fmt.max_code + 1) * in_fmt.step
    if f.kind == "tanh":
        return RegionSpec(RegionKind.ODD_SYMMETRIC_SATURATING, (-end, end), (-1.0, 1.0))
    if f.kind in ("selu", "elu"):
        lam = f.lam if f.kind == "selu" else 1.0
        sat = -f.alpha * (lam if folded else 1.0)
        return RegionSpec(RegionKind.NEGATIVE_EXP_SATURATING, (-in_fmt.max_value, 0.0), (sat,), gain=lam)
    return RegionSpec(RegionKind.CUSTOM, (0.0, end), (float(f(end)),))


def magnitude_function(f: ActivationSpec, folded: bool = True):
    """The nonnegative function the table samples, as a function of input magnitude."""
    if f.kind == "tanh":
        return lambda t: np.tanh(t)
    if f.kind in ("selu", "elu"):
        lam = f.lam if (f.kind == "selu" and folded) else 1.0
        return lambda t: -lam * f.alpha * np.expm1(-np.asarray(t, dtype=np.float64))
    return lambda t: f(t)


@dataclass(frozen=True, eq=False)
class QuantizedFunctionTable:
    activation: ActivationSpec
    in_fmt: FixedPointFormat
    out_fmt: FixedPointFormat
    entries: np.ndarray
    region: RegionSpec
    convention: SamplingConvention = DEFAULT_CONVENTION
    folded: bool = True
    sample_points: np.ndarray = field(default=None, repr=False)
    exact_values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.int64)
        if e.shape != (1 << self.in_fmt.bits,):
            raise ValueError(f"table needs {1 << self.in_fmt.bits} entries, got {e.shape}")
        if e.min() < 0 or e.max() > self.out_fmt.max_code:
            raise ValueError(f"entries must lie in 0..{self.out_fmt.max_code}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n_in(self) -> int:
        return self.in_fmt.bits

    @property
    def n_out(self) -> int:
        return self.out_fmt.bits

    @property
    def name(self) -> str:
        return f"{self.activation.label}_{self.n_out}_{self.n_in}"

    @property
    def gain_code(self) -> int:
        """Linear-branch gain quantized to the output grid."""
        return round(self.region.gain * self.out_fmt.scale)

    def saturation_codes(self) -> tuple[int, int]:
        """Signed (low, high) saturation output codes."""
        sat = self.region.saturation
        mode = self.convention.range_mode
        if self.region.kind is RegionKind.ODD_SYMMETRIC_SATURATING:
            return -_quantize(-sat[0], self.out_fmt, mode), _quantize(sat[1], self.out_fmt, mode)
        if self.region.kind is RegionKind.NEGATIVE_EXP_SATURATING:
            lo = _quantize(-sat[0], self.out_fmt, mode)
            if not self.folded:
                lo = math.floor(lo * self.gain_code / self.out_fmt.scale + 0.5)
            return -lo, 0
        return 0, _quantize(sat[0], self.out_fmt, mode)

    def with_entries(self, entries) -> "QuantizedFunctionTable":
        return replace(self, entries=np.asarray(entries, dtype=np.int64))

    def output_bit_column(self, j: int) -> np.ndarray:
        return ((self.entries >> j) & 1).astype(bool)

    def to_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(header.rstrip("\n") + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["input_code", "input_value", "exact_value", "output_code", "output_value", "abs_error"])
        for c, e in enumerate(self.entries):
            out_v = decode(int(e), self.out_fmt)
            exact = float(self.exact_values[c])
            w.writerow([c, repr(decode(c, self.in_fmt)), repr(exact), int(e), repr(out_v), repr(abs(exact - out_v))])
        return buf.getvalue()


def representative_points(in_fmt: FixedPointFormat, convention: SamplingConvention) -> np.ndarray:
    codes = np.arange(1 << in_fmt.bits, dtype=np.float64)
    if convention.domain_point is DomainPoint.MIDPOINT:
        codes = codes + 0.5
    return codes * in_fmt.step


def build_table(
    f: ActivationSpec,
    in_fmt: FixedPointFormat,
    out_fmt: FixedPointFormat,
    convention: SamplingConvention = DEFAULT_CONVENTION,
    folded: bool = True,
) -> QuantizedFunctionTable:
    if out_fmt.frac_bits == 0:
        warnings.warn(f"output format {out_fmt} has no fractional bits", stacklevel=2)
    if f.kind == "custom":
        lo, hi = f.domain
        if lo > 0 or hi < (in_fmt.max_code + 1) * in_fmt.step:
            raise ValueError(f"input format {in_fmt} reaches outside the declared domain {f.domain}")
        if f.range[0] < 0 or f.range[1] > out_fmt.max_value + out_fmt.step / 2:
            raise ValueError(f"declared range {f.range} does not fit output format {out_fmt}")
    pts = representative_points(in_fmt, convention)
    mag = magnitude_function(f, folded)
    exact = np.asarray(mag(pts), dtype=np.float64)
    entries = np.empty(pts.shape, dtype=np.int64)
    for c, v in enumerate(exact):
        if not math.isfinite(v) or v < 0:
            raise TableRangeError(c, v, out_fmt)
        q = _quantize(float(v), out_fmt, convention.range_mode)
        if q > out_fmt.max_code:
            raise TableRangeError(c, v, out_fmt)
        entries[c] = q
    region = region_for(f, in_fmt, folded)
    table = QuantizedFunctionTable(f, in_fmt, out_fmt, entries, region, convention, folded, pts, exact)
    lo, hi = table.saturation_codes()
    for s in (lo, hi):
        if abs(s) > out_fmt.max_code:
            raise ValueError(f"saturation code {s} does not fit output format {out_fmt}")
    return table


_KIND_CODES = {
    RegionKind.ODD_SYMMETRIC_SATURATING: kernels.KIND_ODD,
    RegionKind.NEGATIVE_EXP_SATURATING: kernels.KIND_NEGEXP,
    RegionKind.CUSTOM: kernels.KIND_CLAMP,
}


def reference_codes(x, table: QuantizedFunctionTable) -> np.ndarray:
    """Signed output codes (units of the output step) of the wrapped table."""
    sat_lo, sat_hi = table.saturation_codes()
    return kernels.activation_codes(
        np.asarray(x, dtype=np.float64),
        table.entries,
        _KIND_CODES[table.region.kind],
        table.in_fmt.step,
        table.convention.domain_point is DomainPoint.NEAREST_GRID,
        table.region.lo,
        table.region.hi,
        sat_lo,
        sat_hi,
        table.gain_code,
        table.out_fmt.scale,
        not table.folded,
    )


def reference_eval_array(x, table: QuantizedFunctionTable) -> np.ndarray:
    return reference_codes(x, table) * table.out_fmt.step


def reference_eval(x: float, table: QuantizedFunctionTable) -> float:
    """Bit-accurate value of the wrapped circuit at a single input."""
    return float(reference_eval_array(np.array([x], dtype=np.float64), table)[0])
