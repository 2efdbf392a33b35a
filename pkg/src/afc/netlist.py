"""Evaluable AND/OR-plane circuits and technology-independent cost proxies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from afc import kernels
from afc.minimizer import Cube, PlaCover
from afc.tabulator import QuantizedFunctionTable, RegionSpec

# gate-equivalent weights for the ROM baselines (unit = one 2-input gate)
ROM_BIT_GE = 0.5
FULL_ADDER_GE = 5
FLIPFLOP_GE = 6


@dataclass(frozen=True)
class PlaNetlist:
    name: str
    n_in: int
    n_out: int
    products: tuple[Cube, ...]
    outputs: tuple[tuple[int, ...], ...]
    region: RegionSpec | None = None
    table: QuantizedFunctionTable | None = None

    def __post_init__(self):
        used = set()
        for idx in self.outputs:
            for p in idx:
                if not 0 <= p < len(self.products):
                    raise ValueError(f"OR plane references missing product {p}")
                used.add(p)
        if len(used) != len(self.products):
            raise ValueError("every product must feed at least one output")

    @classmethod
    def from_cover(cls, cover: PlaCover, name: str, table: QuantizedFunctionTable | None = None) -> "PlaNetlist":
        """Build a netlist, dropping products no output uses."""
        keep = sorted({p for idx in cover.outputs for p in idx})
        remap = {old: new for new, old in enumerate(keep)}
        products = tuple(cover.products[p] for p in keep)
        outputs = tuple(tuple(remap[p] for p in idx) for idx in cover.outputs)
        region = table.region if table is not None else None
        return cls(name, cover.n_in, cover.n_out, products, outputs, region, table)

    def to_cover(self) -> PlaCover:
        return PlaCover.build(
            self.n_in, self.n_out, ((c, {j for j, idx in enumerate(self.outputs) if p in idx}) for p, c in enumerate(self.products))
        )

    def arrays(self):
        masks = np.array([c.mask for c in self.products], dtype=np.int64)
        values = np.array([c.value for c in self.products], dtype=np.int64)
        or_matrix = np.zeros((self.n_out, len(self.products)), dtype=np.bool_)
        for j, idx in enumerate(self.outputs):
            or_matrix[j, list(idx)] = True
        return masks, values, or_matrix

    def eval(self, input_code: int) -> int:
        if not 0 <= input_code < (1 << self.n_in):
            raise ValueError(f"input code {input_code} out of range")
        word = 0
        for j, idx in enumerate(self.outputs):
            if any(self.products[p].contains_minterm(input_code) for p in idx):
                word |= 1 << j
        return word

    def eval_many(self, codes) -> np.ndarray:
        masks, values, or_matrix = self.arrays()
        return kernels.eval_cover(masks, values, or_matrix, np.asarray(codes, dtype=np.int64))

    def eval_all(self) -> np.ndarray:
        return self.eval_many(np.arange(1 << self.n_in, dtype=np.int64))


@dataclass(frozen=True)
class CostReport:
    method: str
    product_count: int = 0
    literal_count: int = 0
    or_input_count: int = 0
    gate_equiv_area: float = 0.0
    depth_levels: int = 0
    rom_bits: int = 0
    clock_cycles: int = 0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> dict:
        return asdict(self)


def _clog2(v: int) -> int:
    return math.ceil(math.log2(v)) if v > 1 else 0


def cost(netlist: PlaNetlist) -> CostReport:
    """Two-level gate-equivalent proxy.

    An f-input AND or OR counts f-1 two-input gates; every input bit used in
    complemented form adds one shared inverter.
    """
    widths = [c.literal_count for c in netlist.products]
    fanins = [len(idx) for idx in netlist.outputs]
    inverted = 0
    for i in range(netlist.n_in):
        bit = 1 << i
        if any(c.mask & bit and not c.value & bit for c in netlist.products):
            inverted += 1
    area = sum(max(w - 1, 0) for w in widths) + sum(max(f - 1, 0) for f in fanins) + inverted
    depth = _clog2(max(widths, default=0)) + _clog2(max(fanins, default=0))
    return CostReport(
        method="combinational",
        product_count=len(netlist.products),
        literal_count=sum(widths),
        or_input_count=sum(fanins),
        gate_equiv_area=float(area),
        depth_levels=depth,
        rom_bits=0,
        clock_cycles=0,
    )


ROM_MIN_ROWS = 32


def rom_cost(
    table: QuantizedFunctionTable,
    kind: str = "values",
    k_bits: int | None = None,
    b_bits: int | None = None,
) -> CostReport:
    """Storage and gate-equivalent proxy for the LUT baselines.

    ``values`` stores one output word per input code (1-cycle read);
    ``slope_intercept`` stores a slope and an intercept word per segment and
    adds a multiply-add stage (2 cycles).  Memory macros have at least
    :data:`ROM_MIN_ROWS` rows.
    """
    n, m = table.n_in, table.n_out
    rows = max(ROM_MIN_ROWS, 1 << n)
    address_bits = _clog2(rows)
    decoder = rows * max(address_bits - 1, 0)
    if kind == "values":
        bits = rows * m
        area = bits * ROM_BIT_GE + decoder + m * FLIPFLOP_GE
        return CostReport("rom_y", rom_bits=bits, gate_equiv_area=float(area), depth_levels=_clog2(address_bits) + _clog2(rows), clock_cycles=1)
    if kind == "slope_intercept":
        k_bits = k_bits or m
        b_bits = b_bits or m
        bits = rows * (k_bits + b_bits)
        # k * x array multiplier plus the intercept adder
        mult = k_bits * n + max(k_bits - 1, 0) * n * FULL_ADDER_GE
        adder = max(k_bits + n, b_bits) * FULL_ADDER_GE
        regs = (k_bits + b_bits + m) * FLIPFLOP_GE
        area = bits * ROM_BIT_GE + decoder + mult + adder + regs
        depth = _clog2(address_bits) + _clog2(rows) + _clog2(n) + 2 * _clog2(k_bits + n)
        return CostReport("rom_kb", rom_bits=bits, gate_equiv_area=float(area), depth_levels=depth, clock_cycles=2)
    raise ValueError(f"unknown ROM kind {kind!r}")


def cost_csv(reports: list[CostReport], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header.rstrip("\n") + "\n")
    w = csv.DictWriter(buf, fieldnames=CostReport.columns(), lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def cost_table(reports: list[CostReport]) -> str:
    """Fixed-width text rendering with area ratios against the first report."""
    cols = CostReport.columns()
    base = reports[0].gate_equiv_area if reports else 0.0
    head = cols + ["area_ratio"]
    rows = []
    for r in reports:
        d = r.row()
        ratio = f"{r.gate_equiv_area / base:.2f}" if base else "-"
        rows.append([str(d[c]) for c in cols] + [ratio])
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
