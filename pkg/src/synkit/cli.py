"""The ``synkit`` command line.

Exit status: 0 success, 1 I/O, 2 usage or bad input, 3 verification
failure, 4 internal error.  Failures print one line to stderr of the form
``synkit: error: CODE: message``.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .aig import aig_to_netlist, balance, strash
from .errors import EquivalenceFailure, SynkitError, UnknownPass, UsageError
from .lau import SpeedGrade, gen_adder, gen_macc, gen_macc_split, gen_mul, gen_pp, lau_replace, unit_gate_cost
from .liberty import load_library, parse_cell_library, write_cell_library
from .lms import (RecordLibrary, load_record_library, lms_rewrite, lms_script, read_record_library,
                  record_add, record_probe, write_record_library)
from .opt import PASSES, barrel_lower, shift_to_blockmux
from .report import lower_for_cost, measure, report_at, report_json
from .snl import parse_netlist, write_netlist
from .sta import sta
from .techmap import DelayParams, compile_timing, map_cells, unit_timing
from .verify import (CounterExample, Equivalent, Exhaustive, Random, build_miter, check_equiv,
                     default_mode, write_cnf)


# ---------------------------------------------------------------- passes

GENERATORS = ("add", "mul", "macc", "macc-split", "pp")

@dataclass
class PassSpec:
    run: object  # (netlist, ctx, **options) -> netlist
    options: dict = field(default_factory=dict)  # option -> (parser, default)
    needs_lib: bool = False


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _grade(text):
    return SpeedGrade(text.lower())


def _aig_pass(fn):
    return lambda nl, ctx: aig_to_netlist(fn(strash(nl, ctx.lib)), nl.name)


def _lms_pass(nl, ctx, records, iters):
    res = lms_script(strash(nl, ctx.lib), load_record_library(records), iters)
    return aig_to_netlist(res.aig, nl.name)


def _lmsrw_pass(nl, ctx, records):
    return aig_to_netlist(lms_rewrite(strash(nl, ctx.lib), load_record_library(records)), nl.name)


def _map_pass(nl, ctx, slew, gain, delay_target, unit):
    timing = unit_timing(ctx.lib) if unit else compile_timing(ctx.lib, DelayParams(slew, gain))
    return map_cells(strash(nl, ctx.lib), ctx.lib, timing, delay_target)


REGISTRY = {
    "shift2mux": PassSpec(lambda nl, ctx, fallback: shift_to_blockmux(nl, fallback),
                          {"fallback": (_bool, True)}),
    "barrel": PassSpec(lambda nl, ctx: barrel_lower(nl)),
    "constprop": PassSpec(lambda nl, ctx: PASSES["constprop"](nl)),
    "dce": PassSpec(lambda nl, ctx: PASSES["dce"](nl)),
    "infermacc": PassSpec(lambda nl, ctx: PASSES["infermacc"](nl)),
    "lau": PassSpec(lambda nl, ctx, grade: lau_replace(nl, grade), {"grade": (_grade, SpeedGrade.FAST)}),
    "strash": PassSpec(_aig_pass(lambda a: a)),
    "balance": PassSpec(_aig_pass(balance)),
    "lmsrewrite": PassSpec(_lmsrw_pass, {"records": (str, None)}),
    "lms": PassSpec(_lms_pass, {"records": (str, None), "iters": (int, 12)}),
    "map": PassSpec(_map_pass, {"slew": (float, 20.0), "gain": (float, 3.0),
                                "delay_target": (float, None), "unit": (_bool, False)},
                    needs_lib=True),
}


def register_pass(name, run, options=None, needs_lib=False):
    """Make ``name`` available to ``--pass``."""
    REGISTRY[name] = PassSpec(run, dict(options or {}), needs_lib)


@dataclass
class PipelineConfig:
    passes: list  # [(name, {option: value})]
    input: str = None
    output: str = None
    report: str = None
    fmt: str = "csv"
    check: bool = False
    seed: int = 42
    lib: object = None
    timing: object = None


def parse_pass_list(text):
    """``NAME[:key=value...][,NAME...]`` into validated (name, options) pairs."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, *kvs = item.split(":")
        spec = REGISTRY.get(name)
        if spec is None:
            raise UnknownPass(f"unknown pass {name!r}; known: {', '.join(sorted(REGISTRY))}")
        opts = {}
        for kv in kvs:
            key, sep, val = kv.partition("=")
            if not sep or key not in spec.options:
                raise UsageError(f"pass {name} has no option {key!r}")
            try:
                opts[key] = spec.options[key][0](val)
            except ValueError as e:
                raise UsageError(f"pass {name}: bad value for {key}: {e}") from None
        for key, (_, default) in spec.options.items():
            if key not in opts:
                if default is None and key == "records":
                    raise UsageError(f"pass {name} needs option {key}=PATH")
                opts[key] = default
        out.append((name, opts))
    if not out:
        raise UsageError("empty pass list")
    return out


def run_pipeline(config, nl, on_fail=None):
    """Run the passes in order.  Returns the final netlist and one QoR record
    per stage.  With ``check`` each stage is compared against the previous
    one; a difference raises :class:`EquivalenceFailure` after ``on_fail``
    has recorded the counterexample."""
    records = []
    cur = nl
    for name, opts in config.passes:
        spec = REGISTRY[name]
        if spec.needs_lib and config.lib is None:
            raise UsageError(f"pass {name} needs --lib")
        t0 = time.perf_counter()
        nxt = spec.run(cur, config, **opts)
        wall = time.perf_counter() - t0
        if config.check:
            res = check_equiv(cur, nxt, default_mode(cur, seed=config.seed), lib=config.lib)
            if not isinstance(res, Equivalent):
                path = on_fail(name, res) if on_fail else None
                raise EquivalenceFailure(f"stage {name} is not equivalent to its input: {_verdict(res)}", path)
        records.append(measure(nxt, name, config.lib, config.timing, wall))
        cur = nxt
    return cur, records


# ------------------------------------------------------------------ output

class _Outputs:
    """Collects files written by a command so a failure can remove them."""

    def __init__(self):
        self.written = []

    def write(self, path, text):
        if path is None or path == "-":
            sys.stdout.write(text)
            return
        p = Path(path)
        existed = p.exists()
        p.write_text(text)
        if not existed:
            self.written.append(p)

    def keep(self, path):
        self.written = [p for p in self.written if p != Path(path)]

    def rollback(self):
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass


def _verdict(res):
    if isinstance(res, Equivalent):
        kind = "exhaustive" if isinstance(res.mode, Exhaustive) else f"random seed {res.mode.seed}"
        return f"equivalent ({kind}, {res.vectors} vectors)"
    if isinstance(res, CounterExample):
        name, i = res.output_bit
        return f"counterexample on {name}[{i}]"
    return f"inconclusive (budget {res.budget})"


def _cex_json(res, stage=None):
    doc = {"output": res.output_bit[0], "bit": res.output_bit[1],
           "vector": {k: hex(v) for k, v in res.vector.items()}}
    if stage is not None:
        doc = {"stage": stage, **doc}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cex_path(args):
    base = args.output if args.output and args.output != "-" else "synkit"
    return f"{base}.cex.json"


def _read(path):
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _netlist(path, lib=None):
    return parse_netlist(_read(path), lib)


def _lib(args, required=False):
    if getattr(args, "lib", None):
        return load_library(args.lib)
    if required:
        raise UsageError("this command needs --lib")
    return None


def _timing(args, lib):
    if lib is None:
        return None
    if getattr(args, "unit_delay", False):
        return unit_timing(lib)
    return compile_timing(lib, DelayParams(args.slew, args.gain))


def _emit_report(args, out, records):
    text = report_json(records) if args.format == "json" else report_at(records)
    out.write(args.report, text)


# ---------------------------------------------------------------- commands

def cmd_parse(args, out):
    text = _read(args.input)
    kind = args.type or {".slf": "slf", ".srl": "srl"}.get(Path(args.input).suffix, "snl")
    if kind == "slf":
        res = write_cell_library(parse_cell_library(text))
    elif kind == "srl":
        res = write_record_library(read_record_library(text))
    else:
        res = write_netlist(parse_netlist(text, _lib(args)))
    out.write(args.output, res)
    return 0


def cmd_opt(args, out):
    lib = _lib(args)
    cfg = PipelineConfig(parse_pass_list(args.passes), args.input, args.output, args.report,
                         args.format, args.check, args.seed, lib, _timing(args, lib))
    nl = _netlist(args.input, lib)

    def on_fail(stage, res):
        path = _cex_path(args)
        if isinstance(res, CounterExample):
            out.write(path, _cex_json(res, stage))
            out.keep(path)
        return path

    final, records = run_pipeline(cfg, nl, on_fail)
    out.write(args.output, write_netlist(final))
    if args.report:
        _emit_report(args, out, records)
    return 0


def _widths(text, n):
    try:
        ws = [int(w) for w in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --width {text!r}") from None
    if len(ws) == 1:
        ws = ws * n
    if len(ws) != n or min(ws) < 1:
        raise UsageError(f"--width needs {n} positive widths")
    return ws


def cmd_arith(args, out):
    if args.action == "cost":
        c = unit_gate_cost(_netlist(args.input))
        if args.format == "json":
            text = json.dumps({"area": c.area, "delay": c.delay}) + "\n"
        else:
            text = f"area,delay\n{c.area},{c.delay}\n"
        out.write(args.output, text)
        return 0
    kind = args.op or args.kind
    if kind is None:
        raise UsageError("arith gen needs a generator kind")
    if kind == "add":
        (w,) = _widths(args.width, 1)
        nl = gen_adder(w, args.arch or args.grade)
    elif kind == "mul":
        nl = gen_mul(*_widths(args.width, 2), args.grade)
    elif kind == "macc":
        nl = gen_macc(*_widths(args.width, 4), args.grade)
    elif kind == "macc-split":
        nl = gen_macc_split(*_widths(args.width, 4))
    elif kind == "pp":
        nl = gen_pp(*_widths(args.width, 2), args.encoding).to_netlist()
    else:
        raise UsageError(f"unknown generator {kind!r}")
    out.write(args.output, write_netlist(nl))
    return 0


def cmd_record(args, out):
    if args.action == "add":
        if args.records and Path(args.records).exists():
            rl = load_record_library(args.records)
        else:
            rl = RecordLibrary(args.k)
        changed = 0
        for path in args.inputs:
            changed += record_add(rl, strash(_netlist(path)))
        dest = args.output or args.records
        if dest is None:
            raise UsageError("record add needs --records or -o")
        out.write(dest, write_record_library(rl))
        print(f"{changed} entries added or improved; {len(rl)} total", file=sys.stderr)
        return 0
    rl = load_record_library(args.records)
    try:
        tt = int(args.tt, 0)
    except ValueError:
        raise UsageError(f"bad --tt {args.tt!r}") from None
    if not 0 <= tt < (1 << (1 << args.k)):
        raise UsageError(f"--tt does not fit {args.k} variables")
    hit = record_probe(rl, tt, args.k)
    if hit is None:
        out.write(args.output, "miss\n")
        return 0
    st, tr = hit
    text = (f"hit ands={st.ands} depth={st.depth}\n"
            f"perm={','.join(map(str, tr.perm))} mask={tr.mask} oneg={tr.oneg}\n")
    out.write(args.output, text)
    return 0


def cmd_lms(args, out):
    nl = _netlist(args.input)
    res = lms_script(strash(nl), load_record_library(args.records), args.iters, args.K)
    trace = "iteration,ands,depth\n" + "".join(f"{i},{a},{d}\n" for i, a, d in res.trace)
    if args.trace:
        out.write(args.trace, trace)
    else:
        sys.stderr.write(trace)
    new = aig_to_netlist(res.aig, nl.name)
    if args.check:
        _check_pair(args, out, nl, new, None)
    out.write(args.output, write_netlist(new))
    return 0


def cmd_map(args, out):
    lib = _lib(args, required=True)
    nl = _netlist(args.input, lib)
    timing = _timing(args, lib)
    mapped = map_cells(strash(nl, lib), lib, timing, args.delay_target)
    if args.check:
        _check_pair(args, out, nl, mapped, lib)
    out.write(args.output, write_netlist(mapped))
    if args.report:
        rec = measure(mapped, Path(args.input).stem, lib, compile_timing(lib, DelayParams(args.slew, args.gain)))
        _emit_report(args, out, [rec])
    return 0


def cmd_sta(args, out):
    lib = _lib(args, required=True)
    nl = _netlist(args.input, lib)
    timing = compile_timing(lib, DelayParams(args.slew, args.gain))
    rep = sta(nl, lib, timing, args.delay_target)
    fmt, dest = args.format, args.report
    if dest in ("json", "csv"):  # `--report json|csv` selects the format
        fmt, dest = dest, None
    if fmt == "json":
        doc = {"arrival_ps": rep.arrival, "logic_levels": rep.levels, "endpoint": rep.endpoint,
               "path": rep.path}
        if rep.slack is not None:
            doc["slack"] = rep.slack
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = report_at([measure(nl, Path(args.input).stem, lib, timing)])
    out.write(dest or args.output, text)
    return 0


def _check_pair(args, out, a, b, lib):
    res = check_equiv(a, b, default_mode(a, seed=args.seed), lib=lib)
    if isinstance(res, Equivalent):
        return
    path = None
    if isinstance(res, CounterExample):
        path = _cex_path(args)
        out.write(path, _cex_json(res))
        out.keep(path)
    raise EquivalenceFailure(_verdict(res), path)


def cmd_eq(args, out):
    lib = _lib(args)
    a = _netlist(args.a, lib)
    b = _netlist(args.b, lib)
    if args.vectors:
        mode = Random(args.vectors, args.seed)
    else:
        mode = default_mode(a, max_bits=args.exhaustive_limit, seed=args.seed)
    constraint = _netlist(args.assume) if args.assume else None
    if args.emit_cnf:
        out.write(args.emit_cnf, write_cnf(build_miter(lower_for_cost(a), lower_for_cost(b), constraint)))
    res = check_equiv(a, b, mode, constraint, lib=lib)
    if isinstance(res, Equivalent):
        print(_color(_verdict(res), "32"))
        return 0
    path = None
    if isinstance(res, CounterExample):
        path = _cex_path(args)
        out.write(path, _cex_json(res))
        out.keep(path)
    raise EquivalenceFailure(_verdict(res), path)


def cmd_report(args, out):
    lib = _lib(args)
    timing = _timing(args, lib)
    labels = args.label or []
    if labels and len(labels) != len(args.inputs):
        raise UsageError("--label must be given once per input")
    records = []
    for i, path in enumerate(args.inputs):
        t0 = time.perf_counter()
        nl = _netlist(path, lib)
        label = labels[i] if labels else Path(path).stem
        rec = measure(nl, label, lib, timing, delay_target=args.delay_target)
        rec.wall_s = time.perf_counter() - t0
        records.append(rec)
    text = report_json(records) if args.format == "json" else report_at(records)
    out.write(args.report or args.output, text)
    return 0


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42, help="seed for random simulation (default 42)")
    p.add_argument("--check", action="store_true", help="equivalence-check each result")
    p.add_argument("-o", "--output", help="output path (default stdout)")
    p.add_argument("--report", help="QoR report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _timing_flags(p, target=True):
    p.add_argument("--lib", help="cell library (.slf)")
    p.add_argument("--slew", type=float, default=20.0, help="input slew in ps (default 20)")
    p.add_argument("--gain", type=float, default=3.0, help="load gain (default 3)")
    if target:
        p.add_argument("--delay-target", type=float, default=None, help="required arrival in ps")


def build_parser():
    common = _common()
    ap = _Parser(prog="synkit", description="Small logic-synthesis toolkit.")
    ap.add_argument("--version", action="version", version=f"synkit {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", parents=[common], help="parse and re-emit a netlist, library or record file")
    p.add_argument("input")
    p.add_argument("--type", choices=("snl", "slf", "srl"))
    p.add_argument("--lib")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("opt", parents=[common], help="run a pass pipeline")
    p.add_argument("input")
    p.add_argument("--pass", dest="passes", required=True, metavar="NAME[,NAME...]")
    _timing_flags(p, target=False)
    p.add_argument("--unit-delay", action="store_true", help="report with unit delays")
    p.set_defaults(fn=cmd_opt)

    p = sub.add_parser("arith", help="generate or cost arithmetic")
    asub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = asub.add_parser("gen", parents=[common], help="generate an adder, multiplier or MACC")
    q.add_argument("kind", nargs="?", choices=GENERATORS)
    q.add_argument("--op", choices=GENERATORS, help="same as the positional kind")
    q.add_argument("--width", "--widths", dest="width", default="8",
                   help="operand width(s), comma-separated for several operands")
    q.add_argument("--grade", type=_grade, default=SpeedGrade.FAST)
    q.add_argument("--arch", help="adder architecture override (ripple, sklansky, brent-kung)")
    q.add_argument("--encoding", default="none", choices=("none", "booth-r4"))
    q.set_defaults(fn=cmd_arith)
    q = asub.add_parser("cost", parents=[common], help="unit-gate area and delay")
    q.add_argument("input")
    q.set_defaults(fn=cmd_arith)

    p = sub.add_parser("record", help="record library operations")
    rsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = rsub.add_parser("add", parents=[common], help="harvest cuts of netlists")
    q.add_argument("inputs", nargs="+")
    q.add_argument("--records", "--record", dest="records",
                   help="record file to extend (created if missing)")
    q.add_argument("--k", type=int, default=6)
    q.set_defaults(fn=cmd_record)
    q = rsub.add_parser("probe", parents=[common], help="look up a truth table")
    q.add_argument("--records", "--record", dest="records", required=True)
    q.add_argument("--tt", required=True, help="truth table, e.g. 0xe8")
    q.add_argument("--k", type=int, required=True)
    q.set_defaults(fn=cmd_record)

    p = sub.add_parser("lms", parents=[common], help="iterated record-based rewriting")
    p.add_argument("input")
    p.add_argument("--records", "--record", dest="records", required=True)
    p.add_argument("--iters", type=int, default=12)
    p.add_argument("-K", dest="K", type=int, default=6, help="cut size (default 6)")
    p.add_argument("--trace", help="write the per-iteration trace as CSV")
    p.set_defaults(fn=cmd_lms)

    p = sub.add_parser("map", parents=[common], help="map to library cells")
    p.add_argument("input")
    _timing_flags(p)
    p.add_argument("--unit-delay", action="store_true", help="ignore the library timing")
    p.set_defaults(fn=cmd_map)

    p = sub.add_parser("sta", parents=[common], help="static timing of a mapped netlist")
    p.add_argument("input")
    _timing_flags(p)
    p.set_defaults(fn=cmd_sta)

    p = sub.add_parser("eq", parents=[common], help="equivalence check two netlists")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--lib")
    p.add_argument("--random", "--vectors", dest="vectors", type=int,
                   help="random simulation with N vectors")
    p.add_argument("--exhaustive-bits", "--exhaustive-limit", dest="exhaustive_limit", type=int,
                   default=16, help="exhaustive up to this many input bits (default 16)")
    p.add_argument("--assume", help="constraint netlist with a 1-bit output marking legal vectors")
    p.add_argument("--emit-cnf", help="also write the miter as DIMACS CNF")
    p.set_defaults(fn=cmd_eq)

    p = sub.add_parser("report", parents=[common], help="QoR table for netlists")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--label", action="append")
    _timing_flags(p)
    p.add_argument("--unit-delay", action="store_true")
    p.set_defaults(fn=cmd_report)
    return ap


def _color(text, code):
    if os.environ.get("SYNKIT_COLOR", "0") == "1":
        return f"\033[{code}m{text}\033[0m"
    return text


def _fail(code, message, status):
    msg = " ".join(str(message).split())
    print(f"synkit: {_color('error', '31')}: {code}: {msg}", file=sys.stderr)
    return status


def main(argv=None):
    out = _Outputs()
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args, out)
    except SynkitError as e:
        out.rollback()
        msg = str(e)
        if isinstance(e, EquivalenceFailure) and e.path:
            msg += f"; counterexample in {e.path}"
        return _fail(e.code, msg, e.exit_status)
    except OSError as e:
        out.rollback()
        return _fail("E_IO", e, 1)
    except ValueError as e:
        out.rollback()
        return _fail(UsageError.code, e, 2)
    except Exception as e:  # noqa: BLE001 - last-resort exit status
        out.rollback()
        return _fail(SynkitError.code, f"{type(e).__name__}: {e}", 4)


if __name__ == "__main__":
    sys.exit(main())
