"""Berkeley PLA and Verilog-2001 text generation.

PLA columns are written most significant bit first on both planes: input
character ``k`` is ``X_{n-1-k}`` and output character ``k`` is ``Y_{m-1-k}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from afc.baselines import SlopeInterceptTable, build_slope_intercept, csd_digits, gain_residual
from afc.minimizer import Cube, PlaCover
from afc.netlist import PlaNetlist
from afc.tabulator import QuantizedFunctionTable, RegionKind, reference_codes

DEFAULT_GUARD_BITS = 2

_KNOWN_DIRECTIVES = {".i", ".o", ".p", ".e", ".end", ".ilb", ".ob", ".type"}


class PlaParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def emit_pla(cover: PlaCover) -> str:
    lines = [f".i {cover.n_in}", f".o {cover.n_out}", f".p {len(cover.products)}"]
    members = cover.output_sets()
    for cube, outs in zip(cover.products, members):
        bits = "".join("1" if j in outs else "0" for j in range(cover.n_out - 1, -1, -1))
        lines.append(f"{cube} {bits}")
    lines.append(".e")
    return "\n".join(lines)


def parse_pla(text: str) -> PlaCover:
    n_in = n_out = n_products = None
    rows = []
    ended = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise PlaParseError(line_no, "content after .e")
        if line.startswith("."):
            parts = line.split()
            key = parts[0]
            if key not in _KNOWN_DIRECTIVES:
                raise PlaParseError(line_no, f"unknown directive {key}")
            if key in (".e", ".end"):
                ended = True
                continue
            if key in (".ilb", ".ob"):
                continue
            if key == ".type":
                if parts[1:] != ["f"]:
                    raise PlaParseError(line_no, f"unsupported PLA type {' '.join(parts[1:])}")
                continue
            if len(parts) != 2 or not parts[1].isdigit():
                raise PlaParseError(line_no, f"malformed {key} directive")
            value = int(parts[1])
            if key == ".i":
                n_in = value
            elif key == ".o":
                n_out = value
            else:
                n_products = value
            continue
        if n_in is None or n_out is None:
            raise PlaParseError(line_no, "product row before .i/.o header")
        parts = line.split()
        if len(parts) != 2:
            raise PlaParseError(line_no, "expected '<cube> <outputs>'")
        cube_s, out_s = parts
        if len(cube_s) != n_in or set(cube_s) - set("01-"):
            raise PlaParseError(line_no, f"bad input part {cube_s!r}")
        if len(out_s) != n_out or set(out_s) - set("01"):
            raise PlaParseError(line_no, f"bad output part {out_s!r}")
        outs = {n_out - 1 - k for k, ch in enumerate(out_s) if ch == "1"}
        rows.append((Cube.from_string(cube_s), outs))
    if n_in is None or n_out is None:
        raise PlaParseError(0, "missing .i/.o header")
    if n_products is not None and n_products != len(rows):
        raise PlaParseError(0, f".p says {n_products} products, found {len(rows)}")
    return PlaCover.build(n_in, n_out, rows)


# -- Verilog ---------------------------------------------------------------


def _literal(i: int, positive: bool, port: str = "x") -> str:
    return f"{port}[{i}]" if positive else f"~{port}[{i}]"


def _product_expr(cube: Cube) -> str:
    lits = cube.literals()
    if not lits:
        return "1'b1"
    return " & ".join(_literal(i, pos) for i, pos in lits)


def emit_core(netlist: PlaNetlist, module_name: str) -> str:
    """The bare AND/OR planes: ``x[n-1:0] -> y[m-1:0]``."""
    n, m = netlist.n_in, netlist.n_out
    lines = [
        f"module {module_name} (",
        f"    input  wire [{n - 1}:0] x,",
        f"    output wire [{m - 1}:0] y",
        ");",
    ]
    for p, cube in enumerate(netlist.products):
        lines.append(f"    wire p{p} = {_product_expr(cube)};  // {cube}")
    for j in range(m - 1, -1, -1):
        idx = netlist.outputs[j]
        rhs = " | ".join(f"p{p}" for p in idx) if idx else "1'b0"
        lines.append(f"    assign y[{j}] = {rhs};")
    lines.append("endmodule")
    return "\n".join(lines)


@dataclass(frozen=True)
class WrapperPorts:
    """Port geometry of the region wrapper."""

    in_width: int
    in_frac: int
    out_width: int
    out_frac: int

    def input_value(self, pattern: int) -> float:
        signed = pattern - (1 << self.in_width) if pattern >> (self.in_width - 1) else pattern
        return signed * 2.0 ** -self.in_frac

    def to_pattern(self, code: int) -> int:
        return code & ((1 << self.out_width) - 1)


def wrapper_ports(table: QuantizedFunctionTable, guard_bits: int = DEFAULT_GUARD_BITS) -> WrapperPorts:
    in_width = 1 + table.in_fmt.int_bits + guard_bits + table.in_fmt.frac_bits
    max_in = (1 << (in_width - 1))
    lo, hi = table.saturation_codes()
    need = max(table.out_fmt.max_code, abs(lo), abs(hi))
    if table.region.kind is RegionKind.NEGATIVE_EXP_SATURATING:
        need = max(need, _linear_code(max_in - 1, table))
    return WrapperPorts(in_width, table.in_fmt.frac_bits, 1 + need.bit_length(), table.out_fmt.frac_bits)


def _linear_code(x_code: int, table: QuantizedFunctionTable) -> int:
    f = table.in_fmt.frac_bits
    prod = x_code * table.gain_code
    return (prod + (1 << (f - 1))) >> f if f else prod


def _breakpoint_code(value: float, frac: int) -> int:
    return math.ceil(abs(value) * (1 << frac))


def emit_verilog(netlist: PlaNetlist, module_name: str | None = None, guard_bits: int = DEFAULT_GUARD_BITS) -> str:
    """Core AND/OR module plus, when the netlist carries a table, the region wrapper.

    The wrapper takes a signed two's-complement input with the table's
    fraction bits and ``guard_bits`` extra integer bits, and drives a signed
    two's-complement output on the table's output grid.  It is purely
    combinational.
    """
    name = module_name or netlist.name
    core_name = f"{name}_core"
    table = netlist.table
    header = [
        f"// {name}: two-level AND/OR implementation, {len(netlist.products)} shared products",
        "// generated by afc; purely combinational",
        "",
    ]
    core = emit_core(netlist, core_name)
    if table is None:
        return "\n".join(header + [core]) + "\n"
    if not table.folded:
        raise ValueError("the region wrapper is only generated for folded tables")
    ports = wrapper_ports(table, guard_bits)
    W, OW = ports.in_width, ports.out_width
    n, m = netlist.n_in, netlist.n_out
    sat_lo, sat_hi = table.saturation_codes()
    region = table.region
    body = [
        f"module {name} (",
        f"    input  wire signed [{W - 1}:0] x,",
        f"    output wire signed [{OW - 1}:0] y",
        ");",
        f"    // input U{W - 1 - ports.in_frac}.{ports.in_frac} two's complement, output {OW}-bit two's complement with {ports.out_frac} fraction bits",
        f"    wire neg = x[{W - 1}];",
        f"    wire [{W - 1}:0] mag = neg ? ~x + {W}'d1 : x;",
    ]
    if region.kind is RegionKind.CUSTOM:
        body.append(f"    wire [{n - 1}:0] idx = neg ? {n}'d0 : mag[{n - 1}:0];")
    else:
        body.append(f"    wire [{n - 1}:0] idx = mag[{n - 1}:0];")
    body += [
        f"    wire [{m - 1}:0] tab;",
        f"    {core_name} u_core (.x(idx), .y(tab));",
        f"    wire [{OW - 1}:0] tv = tab;",
    ]
    if region.kind is RegionKind.ODD_SYMMETRIC_SATURATING:
        hi_code = _breakpoint_code(region.hi, ports.in_frac)
        lo_code = _breakpoint_code(region.lo, ports.in_frac)
        body += [
            f"    wire [{OW - 1}:0] tneg = ~tv + {OW}'d1;",
            f"    wire sat_hi = ~neg & (mag >= {W}'d{hi_code});",
            f"    wire sat_lo = neg & (mag >= {W}'d{lo_code});",
            f"    wire [{OW - 1}:0] tsig = neg ? tneg : tv;",
            f"    assign y = sat_hi ? {OW}'d{ports.to_pattern(sat_hi)} : (sat_lo ? {OW}'d{ports.to_pattern(sat_lo)} : tsig);",
        ]
    elif region.kind is RegionKind.NEGATIVE_EXP_SATURATING:
        lo_code = _breakpoint_code(region.lo, ports.in_frac)
        g = table.gain_code
        pw = W + g.bit_length() + 1
        terms = []
        for shift, sign in csd_digits(g):
            t = f"(mp << {shift})" if shift else "mp"
            terms.append(("- " if sign < 0 else "+ ") + t)
        expr = " ".join(terms).lstrip("+ ").strip()
        f = ports.in_frac
        if f:
            expr = f"{expr} + {pw}'d{1 << (f - 1)}"
        body += [
            f"    wire [{OW - 1}:0] tneg = ~tv + {OW}'d1;",
            f"    wire sat_lo = neg & (mag >= {W}'d{lo_code});",
            f"    // linear branch: gain {g}/2^{ports.out_frac} = {g / (1 << ports.out_frac):.6f} (residual {gain_residual(table):+.6f}), CSD shift-add",
            f"    wire [{pw - 1}:0] mp = mag;",
            f"    wire [{pw - 1}:0] lin_full = {expr};",
            f"    wire [{OW - 1}:0] lin = lin_full[{pw - 1}:{f}];" if f else f"    wire [{OW - 1}:0] lin = lin_full;",
            f"    assign y = neg ? (sat_lo ? {OW}'d{ports.to_pattern(sat_lo)} : tneg) : lin;",
        ]
    else:
        hi_code = _breakpoint_code(region.hi, ports.in_frac)
        body += [
            f"    wire sat_hi = ~neg & (mag >= {W}'d{hi_code});",
            f"    assign y = sat_hi ? {OW}'d{ports.to_pattern(sat_hi)} : tv;",
        ]
    body.append("endmodule")
    return "\n".join(header + [core, ""] + body) + "\n"


def _case_rom(module_name: str, n: int, words: list[tuple[str, int, list[int]]]) -> list[str]:
    lines = []
    for reg, width, _ in words:
        lines.append(f"    reg [{width - 1}:0] {reg};")
    lines += ["    always @(posedge clk) begin", "        case (addr)"]
    for c in range(1 << n):
        assigns = " ".join(f"{reg} <= {width}'d{vals[c] & ((1 << width) - 1)};" for reg, width, vals in words)
        lines.append(f"            {n}'d{c}: begin {assigns} end" if len(words) > 1 else f"            {n}'d{c}: {assigns}")
    lines += ["        endcase", "    end"]
    return lines


def emit_rom_verilog(
    table: QuantizedFunctionTable,
    kind: str = "values",
    module_name: str | None = None,
    extra_frac_bits: int = 4,
    slope_intercept: SlopeInterceptTable | None = None,
) -> str:
    """Registered LUT baselines over the table's magnitude domain.

    ``values``: one case arm per input code, output registered (1 cycle).
    ``slope_intercept``: k/b words registered in cycle 1, ``k*x + b``
    registered in cycle 2.  The data input carries ``extra_frac_bits`` more
    fraction bits than the address.
    """
    n, m = table.n_in, table.n_out
    if kind == "values":
        name = module_name or f"{table.name}_rom_y"
        lines = [
            f"module {name} (",
            "    input  wire clk,",
            f"    input  wire [{n - 1}:0] addr,",
            f"    output reg  [{m - 1}:0] y",
            ");",
            "    always @(posedge clk) begin",
            "        case (addr)",
        ]
        for c, e in enumerate(table.entries):
            lines.append(f"            {n}'d{c}: y <= {m}'d{int(e)};")
        lines += ["        endcase", "    end", "endmodule"]
        return "\n".join(lines) + "\n"
    if kind != "slope_intercept":
        raise ValueError(f"unknown ROM kind {kind!r}")
    si = slope_intercept or build_slope_intercept(table)
    name = module_name or f"{table.name}_rom_kb"
    xw = n + extra_frac_bits
    xf = table.in_fmt.frac_bits + extra_frac_bits
    kw, bw = si.k_bits, si.b_bits
    pw = max(kw + xw, bw + xf + si.k_frac) + 2
    shift = xf + si.k_frac - table.out_fmt.frac_bits
    b_shift = xf + si.k_frac - si.b_frac
    lines = [
        f"module {name} (",
        "    input  wire clk,",
        f"    input  wire [{xw - 1}:0] x,  // magnitude with {xf} fraction bits",
        f"    output reg  [{m - 1}:0] y",
        ");",
        f"    wire [{n - 1}:0] addr = x[{xw - 1}:{extra_frac_bits}];",
        f"    reg [{xw - 1}:0] x_q;",
    ]
    lines += _case_rom(name, n, [("k", kw, [int(v) for v in si.k_codes]), ("b", bw, [int(v) for v in si.b_codes])])
    lines += [
        "    always @(posedge clk) x_q <= x;",
        f"    wire signed [{pw - 1}:0] kx = $signed(k) * $signed({{1'b0, x_q}});",
        f"    wire signed [{pw - 1}:0] acc = kx + ($signed(b) <<< {b_shift});",
        f"    wire signed [{pw - 1}:0] rounded = acc + ({pw}'sd1 <<< {max(shift - 1, 0)});" if shift > 0 else f"    wire signed [{pw - 1}:0] rounded = acc;",
        f"    wire signed [{pw - 1}:0] scaled = rounded >>> {max(shift, 0)};",
        "    always @(posedge clk) begin",
        f"        if (scaled < 0) y <= {m}'d0;",
        f"        else if (scaled > {(1 << m) - 1}) y <= {m}'d{(1 << m) - 1};",
        f"        else y <= scaled[{m - 1}:0];",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"


def golden_vectors(netlist: PlaNetlist, wrapper: bool = False, guard_bits: int = DEFAULT_GUARD_BITS) -> list[tuple[int, int]]:
    """``(input pattern, expected output pattern)`` for every input code."""
    table = netlist.table
    if not wrapper:
        expected = table.entries if table is not None else netlist.eval_all()
        return [(c, int(v)) for c, v in enumerate(expected)]
    if table is None:
        raise ValueError("wrapper vectors need a netlist built from a table")
    ports = wrapper_ports(table, guard_bits)
    patterns = np.arange(1 << ports.in_width)
    xs = np.array([ports.input_value(int(p)) for p in patterns])
    codes = reference_codes(xs, table)
    return [(int(p), ports.to_pattern(int(c))) for p, c in zip(patterns, codes)]


def emit_testbench(netlist: PlaNetlist, wrapper: bool = False, module_name: str | None = None, guard_bits: int = DEFAULT_GUARD_BITS) -> str:
    """Exhaustive self-checking testbench with an embedded golden vector dump."""
    name = module_name or netlist.name
    vectors = golden_vectors(netlist, wrapper, guard_bits)
    if wrapper:
        ports = wrapper_ports(netlist.table, guard_bits)
        dut, iw, ow = name, ports.in_width, ports.out_width
    else:
        dut, iw, ow = f"{name}_core", netlist.n_in, netlist.n_out
    count = len(vectors)
    lines = [
        "`timescale 1ns/1ps",
        f"module {dut}_tb;",
        f"    reg  [{iw - 1}:0] x;",
        f"    wire [{ow - 1}:0] y;",
        f"    reg  [{ow - 1}:0] golden [0:{count - 1}];",
        "    integer i;",
        "    integer errors;",
        f"    {dut} dut (.x(x), .y(y));",
        "    initial begin",
    ]
    for c, v in vectors:
        lines.append(f"        golden[{c}] = {ow}'d{v};")
    lines += [
        "        errors = 0;",
        f"        for (i = 0; i < {count}; i = i + 1) begin",
        "            x = i;",
        "            #1;",
        "            if (y !== golden[i]) begin",
        '                $display("MISMATCH x=%0d y=%0d expected=%0d", i, y, golden[i]);',
        "                errors = errors + 1;",
        "            end",
        "        end",
        '        if (errors == 0) $display("PASS %0d vectors", ' + str(count) + ");",
        '        else $display("FAIL %0d mismatches", errors);',
        "        $finish;",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"
