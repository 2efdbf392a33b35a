"""Average-error measurement and method comparison reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from afc import baselines, funcref, kernels
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import multi_output_minimize
from afc.netlist import CostReport, PlaNetlist, cost, rom_cost
from afc.tabulator import ALL_CONVENTIONS, DEFAULT_CONVENTION, SamplingConvention, build_table

DEFAULT_N = 100_000


def default_interval(f: ActivationSpec, in_fmt: FixedPointFormat) -> tuple[float, float]:
    """Open comparison interval covered by the input format."""
    if f.kind in ("selu", "elu"):
        return (-in_fmt.max_value, 0.0)
    end = (in_fmt.max_code + 1) * in_fmt.step
    if f.kind == "tanh":
        return (-end, end)
    return (0.0, end)


def sample_points(interval: tuple[float, float], n: int) -> np.ndarray:
    """``n`` uniformly spaced points strictly inside ``interval`` (segment midpoints)."""
    if n < 1:
        raise ValueError("need at least one sample")
    lo, hi = interval
    return lo + (np.arange(n, dtype=np.float64) + 0.5) * ((hi - lo) / n)


def average_error(
    approx: Callable[[np.ndarray], np.ndarray],
    exact: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    n: int = DEFAULT_N,
) -> float:
    """Mean absolute deviation over ``n`` samples, as a percentage (x 100)."""
    x = sample_points(interval, n)
    return 100.0 * kernels.mean_abs_error(np.asarray(approx(x), dtype=np.float64), np.asarray(exact(x), dtype=np.float64))


@dataclass(frozen=True)
class ErrorReport:
    method: str
    average_error_percent: float
    max_error: float
    n_samples: int
    convention: str
    cost: CostReport | None = None

    def row(self) -> dict:
        d = {
            "method": self.method,
            "average_error_percent": self.average_error_percent,
            "max_error": self.max_error,
            "n_samples": self.n_samples,
            "convention": self.convention,
        }
        # methods without a hardware model leave the cost columns blank
        for k in ("product_count", "literal_count", "gate_equiv_area", "rom_bits", "clock_cycles"):
            d[k] = getattr(self.cost, k) if self.cost else ""
        return d


REPORT_COLUMNS = [
    "method", "average_error_percent", "max_error", "n_samples", "convention",
    "product_count", "literal_count", "gate_equiv_area", "rom_bits", "clock_cycles", "area_ratio",
]


def default_methods(f: ActivationSpec) -> list[str]:
    methods = ["combinational", "rom_y", "rom_kb", "taylor", "pow2_approx"]
    if f.kind == "tanh":
        methods.append("taylor5_lut")
    return methods


@dataclass
class Comparison:
    reports: list[ErrorReport]
    x: np.ndarray
    exact: np.ndarray
    curves: dict[str, np.ndarray]

    def table_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(header.rstrip("\n") + "\n")
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        base = next((r.cost.gate_equiv_area for r in self.reports if r.method == "combinational" and r.cost), None)
        for r in self.reports:
            row = r.row()
            area = row["gate_equiv_area"]
            row["area_ratio"] = f"{area / base:.3f}" if base and area else ""
            w.writerow(row)
        return buf.getvalue()

    def curve_csv(self, header: str | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(header.rstrip("\n") + "\n")
        names = list(self.curves)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "exact"] + names + [f"err_{n}" for n in names])
        for i, xv in enumerate(self.x):
            vals = [self.curves[n][i] for n in names]
            w.writerow([repr(float(xv)), repr(float(self.exact[i]))] + [repr(float(v)) for v in vals]
                       + [repr(float(v - self.exact[i])) for v in vals])
        return buf.getvalue()


def build_method(
    name: str,
    f: ActivationSpec,
    in_fmt: FixedPointFormat,
    out_fmt: FixedPointFormat,
    convention: SamplingConvention = DEFAULT_CONVENTION,
    taylor_order: int = 3,
    rom_kb_fit: str = "secant",
    pow2_coeff: float | None = None,
    folded: bool = True,
    hazard_free: bool = False,
) -> tuple[Callable, CostReport | None]:
    if name == "exact":
        return baselines.exact(f), None
    if name == "taylor":
        return baselines.taylor(f, taylor_order), None
    if name == "pow2_approx":
        return baselines.pow2_approx(f, pow2_coeff), None
    table = build_table(f, in_fmt, out_fmt, convention, folded)
    if name == "combinational":
        net = PlaNetlist.from_cover(multi_output_minimize(table, hazard_free=hazard_free), table.name, table)
        return baselines.combinational(net, table), cost(net)
    if name == "rom_y":
        return baselines.rom_y(table), rom_cost(table, "values")
    if name == "rom_kb":
        si = baselines.build_slope_intercept(table, rom_kb_fit)
        return si, rom_cost(table, "slope_intercept", si.k_bits, si.b_bits)
    if name == "taylor5_lut":
        return baselines.taylor5_lut(table), rom_cost(table, "values")
    raise ValueError(f"unknown method {name!r}; choose from {', '.join(baselines.METHODS)}")


def compare_methods(
    f: ActivationSpec,
    in_fmt: FixedPointFormat,
    out_fmt: FixedPointFormat,
    methods: Sequence[str] | None = None,
    interval: tuple[float, float] | None = None,
    n: int = DEFAULT_N,
    convention: SamplingConvention = DEFAULT_CONVENTION,
    curve_points: int | None = 1001,
    **method_options,
) -> Comparison:
    """One :class:`ErrorReport` per method plus per-sample error curves."""
    methods = list(methods or default_methods(f))
    interval = interval or default_interval(f, in_fmt)
    x = sample_points(interval, n)
    exact = np.asarray(f(x), dtype=np.float64)
    cx = sample_points(interval, curve_points) if curve_points else x
    cexact = np.asarray(f(cx), dtype=np.float64)
    reports, curves = [], {}
    for name in methods:
        fn, c = build_method(name, f, in_fmt, out_fmt, convention, **method_options)
        approx = np.asarray(fn(x), dtype=np.float64)
        ae = 100.0 * kernels.mean_abs_error(approx, exact)
        reports.append(ErrorReport(name, ae, float(np.max(np.abs(approx - exact))), n, str(convention), c))
        curves[name] = np.asarray(fn(cx), dtype=np.float64)
    return Comparison(reports, cx, cexact, curves)


@dataclass(frozen=True)
class SweepRow:
    convention: SamplingConvention
    average_error_percent: float
    distance: float


def convention_sweep(
    f: ActivationSpec,
    in_fmt: FixedPointFormat,
    out_fmt: FixedPointFormat,
    target_ae: float,
    interval: tuple[float, float] | None = None,
    n: int = DEFAULT_N,
    method: str = "rom_y",
    quantize: bool = True,
) -> list[SweepRow]:
    """Average error under every sampling convention, closest to ``target_ae`` first.

    ``quantize=False`` evaluates the exact function instead of the table and
    is the zero-error control.
    """
    interval = interval or default_interval(f, in_fmt)
    rows = []
    for conv in ALL_CONVENTIONS:
        fn = baselines.exact(f) if not quantize else build_method(method, f, in_fmt, out_fmt, conv)[0]
        ae = average_error(fn, f, interval, n)
        rows.append(SweepRow(conv, ae, abs(ae - target_ae)))
    rows.sort(key=lambda r: (r.distance, str(r.convention)))
    return rows


def sweep_csv(rows: list[SweepRow], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header.rstrip("\n") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["convention", "average_error_percent", "distance_to_target", "best"])
    for i, r in enumerate(rows):
        w.writerow([str(r.convention), repr(r.average_error_percent), repr(r.distance), int(i == 0)])
    return buf.getvalue()


def exp_curves(
    interval: tuple[float, float] = (-1.0, 1.0),
    rows: int = 16,
    taylor_order: int = 3,
    n: int = 1001,
    pow2_coeff: float = 1.44,
) -> Comparison:
    """e^x approximated by a value LUT, a slope/intercept LUT, a Taylor polynomial and 2^(c x)."""
    lo, hi = interval
    x = sample_points(interval, n)
    exact = np.exp(x)
    methods = {
        "rom_y": baselines.uniform_lut(np.exp, lo, hi, rows),
        "rom_kb": baselines.uniform_secant(np.exp, lo, hi, rows),
        "taylor": lambda v: funcref.taylor_exp(v, taylor_order, 0.0),
        "pow2_approx": lambda v: funcref.exp_pow2_approx(v, pow2_coeff),
    }
    reports, curves = [], {}
    for name, fn in methods.items():
        approx = np.asarray(fn(x), dtype=np.float64)
        reports.append(ErrorReport(name, 100.0 * kernels.mean_abs_error(approx, exact), float(np.max(np.abs(approx - exact))), n, "-"))
        curves[name] = approx
    return Comparison(reports, x, exact, curves)
