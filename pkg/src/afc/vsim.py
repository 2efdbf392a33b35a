"""Simulator for the combinational Verilog subset produced by :mod:`afc.emitter`.

Supported: ``module`` headers with ``input``/``output wire`` ports, ``wire``
declarations with optional initialiser, ``assign`` to whole nets or single
bits, named-port module instances, and the operators ``~ & | ^ + - << >>
< <= > >= == != ?:`` with bit/part selects and sized literals.  All nets are
unsigned bit patterns masked to their declared width, which matches Verilog
semantics for this subset.  Anything else raises :class:`VerilogSubsetError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class VerilogSubsetError(ValueError):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+'s?[bdhBDH][0-9a-fA-F_xzXZ]+|\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_$]*)"
    r"|(?P<op><<<|>>>|<<|>>|<=|>=|==|!=|&&|\|\||[~&|^+\-<>?:()\[\],.;=*!]))"
)


def _tokenize(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise VerilogSubsetError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        out.append(m.group(m.lastgroup))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _literal(tok: str) -> int:
    if "'" not in tok:
        return int(tok)
    _, rest = tok.split("'", 1)
    rest = rest.lstrip("sS")
    base = {"b": 2, "d": 10, "h": 16}[rest[0].lower()]
    digits = rest[1:].replace("_", "")
    if set(digits.lower()) & set("xz"):
        raise VerilogSubsetError(f"x/z literals unsupported: {tok}")
    return int(digits, base)


_BINARY = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5, "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7, "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10,
}


class _Parser:
    def __init__(self, tokens: list[str]):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise VerilogSubsetError(f"expected {expect!r}, got {tok!r}")
        self.i += 1
        return tok

    def expr(self):
        cond = self.binary(0)
        if self.peek() == "?":
            self.take("?")
            a = self.expr()
            self.take(":")
            b = self.expr()
            return lambda env: a(env) if cond(env) else b(env)
        return cond

    def binary(self, min_prec: int):
        lhs = self.unary()
        while True:
            op = self.peek()
            prec = _BINARY.get(op)
            if prec is None or prec < min_prec:
                return lhs
            self.take()
            rhs = self.binary(prec + 1)
            lhs = _combine(op, lhs, rhs)

    def unary(self):
        tok = self.peek()
        if tok == "~":
            self.take()
            inner = self.unary()
            return lambda env: ~inner(env)
        if tok == "!":
            self.take()
            inner = self.unary()
            return lambda env: int(not inner(env))
        if tok == "-":
            self.take()
            inner = self.unary()
            return lambda env: -inner(env)
        return self.primary()

    def primary(self):
        tok = self.take()
        if tok == "(":
            e = self.expr()
            self.take(")")
            return e
        if tok[0].isdigit():
            v = _literal(tok)
            return lambda env: v
        if tok[0].isalpha() or tok[0] == "_":
            name = tok
            if self.peek() == "[":
                self.take("[")
                hi = int(self.take())
                lo = hi
                if self.peek() == ":":
                    self.take(":")
                    lo = int(self.take())
                self.take("]")
                mask = (1 << (hi - lo + 1)) - 1
                return lambda env: (env[name] >> lo) & mask
            return lambda env: env[name]
        raise VerilogSubsetError(f"unexpected token {tok!r}")


def _combine(op, a, b):
    return {
        "||": lambda env: int(bool(a(env)) or bool(b(env))),
        "&&": lambda env: int(bool(a(env)) and bool(b(env))),
        "|": lambda env: a(env) | b(env),
        "^": lambda env: a(env) ^ b(env),
        "&": lambda env: a(env) & b(env),
        "==": lambda env: int(a(env) == b(env)),
        "!=": lambda env: int(a(env) != b(env)),
        "<": lambda env: int(a(env) < b(env)),
        "<=": lambda env: int(a(env) <= b(env)),
        ">": lambda env: int(a(env) > b(env)),
        ">=": lambda env: int(a(env) >= b(env)),
        "<<": lambda env: a(env) << b(env),
        ">>": lambda env: a(env) >> b(env),
        "+": lambda env: a(env) + b(env),
        "-": lambda env: a(env) - b(env),
        "*": lambda env: a(env) * b(env),
    }[op]


def _parse_expr(text: str):
    p = _Parser(_tokenize(text))
    e = p.expr()
    if p.peek() is not None:
        raise VerilogSubsetError(f"trailing tokens in expression {text!r}")
    return e


@dataclass
class Module:
    name: str
    inputs: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, int] = field(default_factory=dict)
    widths: dict[str, int] = field(default_factory=dict)
    steps: list = field(default_factory=list)


_DECL = re.compile(r"^(input|output)\s+(?:wire\s+)?(?:signed\s+)?(?:\[(\d+):(\d+)\]\s*)?([A-Za-z_]\w*)$")
_WIRE = re.compile(r"^wire\s+(?:signed\s+)?(?:\[(\d+):(\d+)\]\s*)?([A-Za-z_]\w*)\s*(?:=\s*(.+))?$", re.S)
_ASSIGN = re.compile(r"^assign\s+([A-Za-z_]\w*)(?:\[(\d+)\])?\s*=\s*(.+)$", re.S)
_INST = re.compile(r"^([A-Za-z_]\w*)\s+([A-Za-z_]\w*)\s*\((.*)\)$", re.S)
_CONN = re.compile(r"\.([A-Za-z_]\w*)\s*\(([^()]*)\)")


def _strip_comments(text: str) -> str:
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
    return re.sub(r"//[^\n]*", "", text)


def parse_modules(text: str) -> dict[str, Module]:
    text = _strip_comments(text)
    modules = {}
    for m in re.finditer(r"\bmodule\s+([A-Za-z_]\w*)\s*\((.*?)\)\s*;(.*?)\bendmodule\b", text, re.S):
        mod = Module(m.group(1))
        for port in m.group(2).split(","):
            port = " ".join(port.split())
            if not port:
                continue
            d = _DECL.match(port)
            if not d:
                raise VerilogSubsetError(f"unsupported port declaration {port!r}")
            width = int(d.group(2)) - int(d.group(3)) + 1 if d.group(2) else 1
            (mod.inputs if d.group(1) == "input" else mod.outputs)[d.group(4)] = width
            mod.widths[d.group(4)] = width
        for stmt in m.group(3).split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            if stmt.startswith(("always", "reg", "initial", "integer")):
                raise VerilogSubsetError(f"sequential construct not supported: {stmt.split()[0]}")
            w = _WIRE.match(stmt)
            if w:
                width = int(w.group(1)) - int(w.group(2)) + 1 if w.group(1) else 1
                mod.widths[w.group(3)] = width
                if w.group(4):
                    mod.steps.append(("assign", w.group(3), None, _parse_expr(w.group(4))))
                continue
            a = _ASSIGN.match(stmt)
            if a:
                bit = int(a.group(2)) if a.group(2) else None
                mod.steps.append(("assign", a.group(1), bit, _parse_expr(a.group(3))))
                continue
            inst = _INST.match(stmt)
            if inst:
                conns = {p: e.strip() for p, e in _CONN.findall(inst.group(3))}
                mod.steps.append(("inst", inst.group(1), inst.group(2), conns))
                continue
            raise VerilogSubsetError(f"unsupported statement {stmt[:40]!r}")
        modules[mod.name] = mod
    if not modules:
        raise VerilogSubsetError("no module found")
    return modules


def simulate(modules: dict[str, Module], top: str, inputs: dict[str, int]) -> dict[str, int]:
    """Evaluate ``top`` once; statements run in source order (the emitter writes them topologically)."""
    mod = modules[top]
    env = {}
    for name, width in mod.inputs.items():
        env[name] = inputs[name] & ((1 << width) - 1)
    for name in mod.outputs:
        env.setdefault(name, 0)
    for step in mod.steps:
        if step[0] == "assign":
            _, target, bit, expr = step
            value = expr(env)
            if bit is None:
                env[target] = value & ((1 << mod.widths[target]) - 1)
            else:
                cur = env.get(target, 0)
                env[target] = (cur & ~(1 << bit)) | ((value & 1) << bit)
        else:
            _, sub_name, _, conns = step
            sub = modules[sub_name]
            sub_in = {p: _parse_expr(e)(env) for p, e in conns.items() if p in sub.inputs}
            res = simulate(modules, sub_name, sub_in)
            for p, e in conns.items():
                if p in sub.outputs:
                    env[e] = res[p] & ((1 << mod.widths[e]) - 1)
    return {name: env[name] for name in mod.outputs}


def run_vectors(text: str, top: str, vectors, in_port: str = "x", out_port: str = "y") -> list[tuple[int, int, int]]:
    """Simulate every ``(input, expected)`` pair; returns mismatches as ``(input, got, expected)``."""
    modules = parse_modules(text)
    bad = []
    for x, expected in vectors:
        got = simulate(modules, top, {in_port: x})[out_port]
        if got != expected:
            bad.append((x, got, expected))
    return bad
