"""Command-line driver: ``afc gen | check | error | nn``.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path

from afc import __version__, analyzer, nn
from afc.baselines import build_slope_intercept
from afc.emitter import PlaParseError, emit_pla, emit_testbench, emit_verilog, golden_vectors, parse_pla
from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.minimizer import DcPolicy, dont_care_codes, multi_output_minimize, uncovered_pairs
from afc.netlist import PlaNetlist, cost, cost_csv, rom_cost
from afc.tabulator import DEFAULT_CONVENTION, SamplingConvention, build_table
from afc.vsim import VerilogSubsetError, parse_modules, run_vectors

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3

FUNCTIONS = ("tanh", "sigmoid", "elu", "selu", "exp")

DEFAULT_FORMATS = {
    "tanh": ("U1.3", "U1.6"),
    "sigmoid": ("U1.3", "U1.6"),
    "elu": ("U2.3", "U1.7"),
    "selu": ("U2.3", "U1.7"),
    "exp": ("U1.3", "U3.5"),
}

# reference average errors used as sweep targets when --target-ae is omitted
REFERENCE_AE = {
    ("tanh", "U1.3", "U1.6"): 4.19,
    ("selu", "U2.3", "U1.7"): 2.22,
}

META_KEYS = ("function", "in_fmt", "out_fmt", "convention", "dc_policy", "hazard_free", "alpha", "lambda")


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(text: str) -> FixedPointFormat:
    try:
        return FixedPointFormat.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _convention(text: str) -> SamplingConvention:
    try:
        return SamplingConvention.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", default=None, help="output directory (default $AFC_OUT_DIR or .)")


def _add_function_args(p: argparse.ArgumentParser, positional: bool = True, optional: bool = False) -> None:
    if positional:
        p.add_argument("function", choices=FUNCTIONS, nargs="?" if optional else None)
    p.add_argument("--in-fmt", type=_fmt, default=None, help="input magnitude format, e.g. U1.3")
    p.add_argument("--out-fmt", type=_fmt, default=None, help="output magnitude format, e.g. U1.6")
    p.add_argument("--convention", type=_convention, default=DEFAULT_CONVENTION, help="domain point and range mode, e.g. left_edge,round")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--unfolded", action="store_true", help="keep lambda outside the SELU table (analysis only)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="afc", description="Compile activation functions to two-level logic.")
    parser.add_argument("--version", action="version", version=f"afc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = sub.add_parser("gen", help="write PLA, Verilog, testbench, truth table and cost report")
    _add_function_args(p)
    p.add_argument("--hazard-free", action="store_true")
    p.add_argument("--dc-policy", choices=[d.value for d in DcPolicy], default=DcPolicy.NONE.value)
    p.add_argument("--name", default=None, help="module/file base name")
    _add_common(p)
    subs["gen"] = p

    p = sub.add_parser("check", help="exhaustively verify .pla/.v files against a regenerated table")
    p.add_argument("files", nargs="+")
    _add_function_args(p, positional=False)
    p.add_argument("--function", choices=FUNCTIONS, default=None, help="override the function recorded in the file")
    p.add_argument("--hazard-free", action="store_true", help="also scan for uncovered adjacent onset pairs")
    p.add_argument("--dc-policy", choices=[d.value for d in DcPolicy], default=None)
    _add_common(p)
    subs["check"] = p

    p = sub.add_parser("error", help="average-error and cost comparison across methods")
    _add_function_args(p, optional=True)
    p.add_argument("--methods", type=_csv_list, default=None, help="comma-separated method list")
    p.add_argument("--n-samples", type=int, default=analyzer.DEFAULT_N)
    p.add_argument("--interval", type=lambda s: tuple(float(v) for v in _csv_list(s)), default=None, help="lo,hi")
    p.add_argument("--taylor-order", type=int, default=3)
    p.add_argument("--sweep-conventions", action="store_true")
    p.add_argument("--target-ae", type=float, default=None)
    p.add_argument("--sweep-out", default=None, help="convention sweep CSV (default stdout)")
    p.add_argument("--exp-figure", action="store_true", help="e^x over [-1,1] with 16-row LUTs, Taylor and 2^(1.44x)")
    p.add_argument("--out", default=None, help="comparison CSV (default stdout)")
    p.add_argument("--curve-out", default=None, help="per-sample error curve CSV")
    p.add_argument("--curve-points", type=int, default=1001)
    _add_common(p)
    subs["error"] = p

    p = sub.add_parser("nn", help="desk-scale accuracy experiments")
    nsub = p.add_subparsers(dest="nn_command", required=True, parser_class=_Parser)
    q = nsub.add_parser("make-data")
    q.add_argument("--classes", type=int, default=3)
    q.add_argument("--dim", type=int, default=2)
    q.add_argument("--n", type=int, default=3000)
    q.add_argument("--out", default="data.csv")
    _add_common(q)
    subs["nn make-data"] = q
    for name in ("train", "eval", "sweep"):
        q = nsub.add_parser(name)
        q.add_argument("--data", default=None, help="dataset CSV (default: synthetic from --seed)")
        q.add_argument("--activation", choices=("tanh", "sigmoid", "elu", "selu"), default="tanh")
        q.add_argument("--hidden", type=int, default=16)
        q.add_argument("--epochs", type=int, default=60)
        q.add_argument("--lr", type=float, default=0.2)
        q.add_argument("--batch-size", type=int, default=32)
        q.add_argument("--convention", type=_convention, default=DEFAULT_CONVENTION)
        _add_common(q)
        subs[f"nn {name}"] = q
    subs["nn train"].add_argument("--out", default="model.json")
    subs["nn eval"].add_argument("--model", required=True)
    subs["nn eval"].add_argument("--variant", required=True, help="e.g. tanh_7_6 (output bits, input bits)")
    subs["nn eval"].add_argument("--out", default=None)
    subs["nn sweep"].add_argument("--variants", type=_csv_list, default=list(nn.DEFAULT_VARIANTS))
    subs["nn sweep"].add_argument("--model", action="append", default=None, help="checkpoint(s); trained on the fly otherwise")
    subs["nn sweep"].add_argument("--out", default=None)
    return parser, subs


# -- config handling ---------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


def _apply_config(sub: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:  # store_true flags
            defaults[key] = _bool(value)
        elif action.nargs in ("+", "*"):
            defaults[key] = value.split()
        elif action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} is not one of {', '.join(map(str, action.choices))}")
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except (argparse.ArgumentTypeError, ValueError) as e:
                raise UsageError(f"config key {key!r}: {e}") from None
    sub.set_defaults(**defaults)


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        key = args.command if args.command != "nn" else f"nn {args.nn_command}"
        _apply_config(subs[key], read_config(args.config))
        args = parser.parse_args(argv)
    args.argv = list(argv)
    return args


# -- helpers -----------------------------------------------------------------


def _header(args) -> str:
    return f"# afc {__version__}; command: afc {shlex.join(args.argv)}; seed: {args.seed}"


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get("AFC_OUT_DIR") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit(text: str, dest: str | None, base: Path | None = None) -> None:
    if dest is None or dest == "-":
        sys.stdout.write(text)
    else:
        p = Path(dest)
        if base is not None and not p.is_absolute():
            p = base / p
        _write(p, text)


def _activation(function: str, alpha, lam) -> ActivationSpec:
    return ActivationSpec.from_name(function, alpha=alpha, lam=lam)


def _formats(function: str, in_fmt, out_fmt) -> tuple[FixedPointFormat, FixedPointFormat]:
    d_in, d_out = DEFAULT_FORMATS[function]
    return in_fmt or FixedPointFormat.parse(d_in), out_fmt or FixedPointFormat.parse(d_out)


def _metadata(args, in_fmt, out_fmt) -> dict[str, str]:
    f = _activation(args.function, args.alpha, args.lam)
    return {
        "function": args.function,
        "in_fmt": str(in_fmt),
        "out_fmt": str(out_fmt),
        "convention": str(args.convention),
        "dc_policy": str(args.dc_policy),
        "hazard_free": str(int(args.hazard_free)),
        "alpha": repr(f.alpha),
        "lambda": repr(f.lam),
    }


def _meta_line(meta: dict[str, str]) -> str:
    return "afc-meta " + " ".join(f"{k}={meta[k]}" for k in META_KEYS)


def read_metadata(text: str) -> dict[str, str]:
    for line in text.splitlines():
        s = line.lstrip("#/ ").strip()
        if s.startswith("afc-meta "):
            return dict(kv.split("=", 1) for kv in s[len("afc-meta "):].split())
    return {}


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    in_fmt, out_fmt = _formats(args.function, args.in_fmt, args.out_fmt)
    f = _activation(args.function, args.alpha, args.lam)
    table = build_table(f, in_fmt, out_fmt, args.convention, folded=not args.unfolded)
    cover = multi_output_minimize(table, args.dc_policy, args.hazard_free)
    name = args.name or table.name
    net = PlaNetlist.from_cover(cover, name, table)
    out = _out_dir(args)
    header = _header(args)
    meta = _meta_line(_metadata(args, in_fmt, out_fmt))

    _write(out / f"{name}.pla", f"{header}\n# {meta}\n{emit_pla(net.to_cover())}\n")
    if table.folded:
        _write(out / f"{name}.v", f"// {header[2:]}\n// {meta}\n{emit_verilog(net, name)}")
        _write(out / f"{name}_tb.v", f"// {header[2:]}\n{emit_testbench(net, wrapper=True)}")
    else:
        # no region wrapper exists for unfolded tables; emit the planes only
        core = emit_verilog(PlaNetlist.from_cover(cover, name), name)
        _write(out / f"{name}.v", f"// {header[2:]}\n// {meta}\n{core}")
        _write(out / f"{name}_tb.v", f"// {header[2:]}\n{emit_testbench(PlaNetlist.from_cover(cover, name))}")
    _write(out / "table.csv", table.to_csv(header))
    reports = [cost(net), rom_cost(table, "values")]
    si = build_slope_intercept(table)
    reports.append(rom_cost(table, "slope_intercept", si.k_bits, si.b_bits))
    _write(out / "cost.csv", cost_csv(reports, header))
    print(f"{name}: {len(net.products)} products, {reports[0].literal_count} literals -> {out}")
    return EXIT_OK


# -- check -------------------------------------------------------------------


def _table_from(meta: dict[str, str], args):
    function = args.function or meta.get("function")
    if function is None:
        raise UsageError("cannot tell which function the file implements; pass --function")
    in_fmt = args.in_fmt or (FixedPointFormat.parse(meta["in_fmt"]) if "in_fmt" in meta else None)
    out_fmt = args.out_fmt or (FixedPointFormat.parse(meta["out_fmt"]) if "out_fmt" in meta else None)
    in_fmt, out_fmt = _formats(function, in_fmt, out_fmt)
    conv = args.convention
    if "convention" in meta and "--convention" not in args.argv:
        conv = SamplingConvention.parse(meta["convention"])
    alpha = args.alpha if args.alpha is not None else (float(meta["alpha"]) if "alpha" in meta else None)
    lam = args.lam if args.lam is not None else (float(meta["lambda"]) if "lambda" in meta else None)
    return build_table(_activation(function, alpha, lam), in_fmt, out_fmt, conv, folded=not args.unfolded)


def _dc_set(meta, args, table) -> set[int]:
    policy = args.dc_policy or meta.get("dc_policy", "none")
    return set(dont_care_codes(table, policy))


def _check_pla(path: Path, args) -> list[str]:
    text = path.read_text()
    meta = read_metadata(text)
    try:
        cover = parse_pla(text)
    except PlaParseError as e:
        raise VerificationFailed(f"{path}: {e}") from None
    table = _table_from(meta, args)
    if (cover.n_in, cover.n_out) != (table.n_in, table.n_out):
        raise VerificationFailed(f"{path}: cover is {cover.n_in}->{cover.n_out} bits, table is {table.n_in}->{table.n_out}")
    dc = _dc_set(meta, args, table)
    got = cover.evaluate_all()
    problems = []
    for code in range(1 << table.n_in):
        if code not in dc and int(got[code]) != int(table.entries[code]):
            problems.append(f"{path}: first failing input code {code}: cover gives {int(got[code])}, table has {int(table.entries[code])}")
            break
    if args.hazard_free or meta.get("hazard_free") == "1":
        for j in range(cover.n_out):
            onset = [c for c in range(1 << cover.n_in) if (int(table.entries[c]) >> j) & 1 and c not in dc]
            pairs = uncovered_pairs(cover.sop(j).cubes, onset, cover.n_in)
            if len(pairs):
                a, b = pairs[0]
                problems.append(f"{path}: output Y{j} leaves adjacent onset codes {int(a)} and {int(b)} without a common cube")
                break
    return problems


def _check_verilog(path: Path, args) -> list[str]:
    text = path.read_text()
    meta = read_metadata(text)
    table = _table_from(meta, args)
    dc = _dc_set(meta, args, table)
    try:
        modules = parse_modules(text)
    except VerilogSubsetError as e:
        raise VerificationFailed(f"{path}: {e}") from None
    core = [m for m in modules if m.endswith("_core")]
    if not core:
        raise VerificationFailed(f"{path}: no *_core module found")
    core_name = core[0]
    problems = []
    vectors = [(c, int(v)) for c, v in enumerate(table.entries) if c not in dc]
    bad = run_vectors(text, core_name, vectors)
    if bad:
        x, got, exp = bad[0]
        problems.append(f"{path}: {core_name} first failing input code {x}: got {got}, expected {exp}")
    top = core_name[: -len("_core")]
    if top in modules and table.folded:
        net = PlaNetlist(top, table.n_in, table.n_out, (), tuple(() for _ in range(table.n_out)), table.region, table)
        bad = run_vectors(text, top, golden_vectors(net, wrapper=True))
        if bad:
            x, got, exp = bad[0]
            problems.append(f"{path}: {top} first failing input pattern {x}: got {got}, expected {exp}")
    return problems


def cmd_check(args) -> int:
    problems = []
    for name in args.files:
        path = Path(name)
        if not path.exists():
            raise UsageError(f"no such file: {name}")
        if path.suffix == ".pla":
            found = _check_pla(path, args)
        elif path.suffix == ".v":
            found = _check_verilog(path, args)
        else:
            raise UsageError(f"{name}: expected a .pla or .v file")
        problems += found
        print(f"{'FAIL' if found else 'PASS'} {name}")
    if problems:
        raise VerificationFailed("\n".join(problems))
    return EXIT_OK


# -- error -------------------------------------------------------------------


def cmd_error(args) -> int:
    out = Path(args.out_dir or os.environ.get("AFC_OUT_DIR") or ".")
    header = _header(args)
    if args.exp_figure:
        comp = analyzer.exp_curves(args.interval or (-1.0, 1.0), taylor_order=args.taylor_order, n=args.curve_points)
        _emit(comp.table_csv(header), args.out, out)
        if args.curve_out:
            _emit(comp.curve_csv(header), args.curve_out, out)
        return EXIT_OK
    if args.function is None:
        raise UsageError("error needs a function unless --exp-figure is given")
    in_fmt, out_fmt = _formats(args.function, args.in_fmt, args.out_fmt)
    f = _activation(args.function, args.alpha, args.lam)
    if args.n_samples < 1:
        raise UsageError("--n-samples must be at least 1")
    comp = analyzer.compare_methods(
        f, in_fmt, out_fmt, args.methods, args.interval, args.n_samples, args.convention,
        curve_points=args.curve_points, taylor_order=args.taylor_order, folded=not args.unfolded,
    )
    _emit(comp.table_csv(header), args.out, out)
    if args.curve_out:
        _emit(comp.curve_csv(header), args.curve_out, out)
    if args.sweep_conventions:
        target = args.target_ae
        if target is None:
            target = REFERENCE_AE.get((args.function, str(in_fmt), str(out_fmt)))
        if target is None:
            raise UsageError("--sweep-conventions needs --target-ae for this function/format pair")
        rows = analyzer.convention_sweep(f, in_fmt, out_fmt, target, args.interval, args.n_samples)
        _emit(analyzer.sweep_csv(rows, header), args.sweep_out, out)
        best = rows[0]
        print(f"# best convention {best.convention}: AE {best.average_error_percent:.2f}% vs target {target:.2f}%", file=sys.stderr)
    return EXIT_OK


# -- nn ----------------------------------------------------------------------


def _dataset(args) -> nn.Dataset:
    if args.data:
        try:
            text = Path(args.data).read_text()
        except OSError as e:
            raise UsageError(f"cannot read {args.data}: {e.strerror}") from None
        return nn.Dataset.from_csv(text, seed=args.seed)
    return nn.generate_synthetic(args.seed)


def _train(args, kind: str, ds: nn.Dataset) -> nn.MlpModel:
    return nn.train(ds, ActivationSpec.from_name(kind), args.hidden, args.epochs, args.lr, args.batch_size, args.seed)


def cmd_nn(args) -> int:
    header = _header(args)
    out = _out_dir(args)
    if args.nn_command == "make-data":
        ds = nn.generate_synthetic(args.seed, args.classes, args.dim, args.n)
        _emit(ds.to_csv(header), args.out, out)
        return EXIT_OK
    ds = _dataset(args)
    if args.nn_command == "train":
        model = _train(args, args.activation, ds)
        p = Path(args.out)
        model.save(p if p.is_absolute() else out / p)
        h = model.history[-1]
        print(f"{args.activation}: train {h['train_accuracy']:.2f}%  test {h['test_accuracy']:.2f}%")
        return EXIT_OK
    if args.nn_command == "eval":
        model = nn.MlpModel.load(args.model)
        table = nn.variant_table(args.variant, model.activation, args.convention)
        row = nn.SweepRow(args.variant, nn.infer(model, ds), nn.infer_quantized(model, ds, table))
        _emit(nn.sweep_report([row], header), args.out, out)
        return EXIT_OK
    models = {}
    for path in args.model or []:
        m = nn.MlpModel.load(path)
        models[m.activation.kind] = m
    for v in args.variants:
        kind = nn.variant_formats(v)[0]
        if kind not in models:
            models[kind] = _train(args, kind, ds)
    rows = nn.sweep(models, ds, args.variants, args.convention)
    _emit(nn.sweep_report(rows, header), args.out, out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "error": cmd_error, "nn": cmd_nn}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"afc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as e:
        print(str(e), file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, OSError) as e:
        print(f"afc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"afc: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
