"""Mini cell-library format (``.slf``).

::

    library NAME
    cell NAND2 area=1.0
    pin A in cap=1.6
    pin B in cap=1.6
    pin Y out cap=0.0
    function Y = !(A & B)
    arc A->Y slew=(5.0,20.0) load=(1.0,8.0) delay=(10.0,30.0;14.0,34.0)
    ...
    end

Delay rows are indexed by input slew (ps), columns by output load (fF).
Function operators by precedence: ``!``, ``&``, ``^``, ``|``.
Areas are in gate equivalents (NAND2 = 1.0).
"""
import bisect
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SemanticError, SyntaxError_

# ---------------------------------------------------------------- functions

_PREC = {"or": 1, "xor": 2, "and": 3}
_SYM = {"or": "|", "xor": "^", "and": "&"}


def _expr_tokens(text, lineno, col0):
    out = []
    for m in re.finditer(r"\s*([A-Za-z_][A-Za-z0-9_]*|[!&|^()]|\S)", text):
        tok = m.group(1)
        out.append((tok, col0 + m.start(1)))
    return out


def parse_expr(text, lineno=None, col0=1):
    toks = _expr_tokens(text, lineno, col0)
    pos = 0

    def peek():
        return toks[pos][0] if pos < len(toks) else None

    def fail(msg, expected=None):
        col = toks[pos][1] if pos < len(toks) else col0 + len(text)
        raise SyntaxError_(msg, lineno, col, expected)

    def binary(level):
        nonlocal pos
        if level > 3:
            return unary()
        op = {1: "|", 2: "^", 3: "&"}[level]
        name = {1: "or", 2: "xor", 3: "and"}[level]
        left = binary(level + 1)
        while peek() == op:
            pos += 1
            left = (name, left, binary(level + 1))
        return left

    def unary():
        nonlocal pos
        t = peek()
        if t == "!":
            pos += 1
            return ("not", unary())
        if t == "(":
            pos += 1
            e = binary(1)
            if peek() != ")":
                fail("unbalanced parenthesis", ")")
            pos += 1
            return e
        if t is not None and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", t):
            pos += 1
            return ("var", t)
        fail(f"unexpected {t!r}" if t else "unexpected end of expression", "operand")

    e = binary(1)
    if pos != len(toks):
        fail(f"unexpected {toks[pos][0]!r}", "operator")
    return e


def format_expr(e, parent=0, right=False):
    op = e[0]
    if op == "var":
        return e[1]
    if op == "not":
        inner = e[1]
        s = format_expr(inner, 4)
        return "!" + s
    p = _PREC[op]
    s = f"{format_expr(e[1], p)} {_SYM[op]} {format_expr(e[2], p, True)}"
    if p < parent or (right and p == parent):
        return f"({s})"
    return s


def expr_vars(e):
    if e[0] == "var":
        return {e[1]}
    return set().union(*(expr_vars(x) for x in e[1:]))


def eval_expr(e, env):
    op = e[0]
    if op == "var":
        return env[e[1]]
    if op == "not":
        return 1 - eval_expr(e[1], env)
    a, b = eval_expr(e[1], env), eval_expr(e[2], env)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    return a ^ b


# ------------------------------------------------------------------- model

@dataclass
class LibPin:
    name: str
    direction: str
    cap: float = 0.0


@dataclass
class DelayTable:
    slew: tuple
    load: tuple
    values: tuple  # rows by slew, columns by load

    def lookup(self, slew, load):
        """Bilinear interpolation, linear extrapolation past the edges."""
        i, ts = _segment(self.slew, slew)
        j, tl = _segment(self.load, load)
        v = self.values
        if len(self.slew) == 1:
            r0 = r1 = v[0]
        else:
            r0, r1 = v[i], v[i + 1]
        if len(self.load) == 1:
            a, b = r0[0], r1[0]
        else:
            a = r0[j] + (r0[j + 1] - r0[j]) * tl
            b = r1[j] + (r1[j + 1] - r1[j]) * tl
        return a + (b - a) * ts


def _segment(axis, x):
    if len(axis) == 1:
        return 0, 0.0
    k = bisect.bisect_right(axis, x) - 1
    k = min(max(k, 0), len(axis) - 2)
    return k, (x - axis[k]) / (axis[k + 1] - axis[k])


@dataclass
class LibCellDef:
    name: str
    area: float
    pins: list = field(default_factory=list)
    function: tuple = None
    arcs: dict = field(default_factory=dict)  # input pin -> DelayTable

    @property
    def inputs(self):
        return [p.name for p in self.pins if p.direction == "in"]

    @property
    def output(self):
        outs = [p.name for p in self.pins if p.direction == "out"]
        return outs[0] if outs else None

    def pin(self, name):
        for p in self.pins:
            if p.name == name:
                return p
        raise KeyError(name)

    def truth_table(self):
        """Function over ``inputs`` order: bit m has input i = bit i of m."""
        ins = self.inputs
        tt = 0
        for m in range(1 << len(ins)):
            env = {n: (m >> i) & 1 for i, n in enumerate(ins)}
            tt |= eval_expr(self.function, env) << m
        return tt

    def avg_input_cap(self):
        caps = [p.cap for p in self.pins if p.direction == "in"]
        return sum(caps) / len(caps)


@dataclass
class CellLibrary:
    name: str
    cells: dict = field(default_factory=dict)  # name -> LibCellDef, declaration order

    def find_function(self, tt, arity):
        for c in self.cells.values():
            if len(c.inputs) == arity and c.truth_table() == tt:
                return c
        return None


# ----------------------------------------------------------------- parsing

def _floats(text, lineno, col):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise SyntaxError_(f"bad number list {text!r}", lineno, col) from None


_ARC = re.compile(r"arc\s+(\w+)\s*->\s*(\w+)\s+slew=\(([^)]*)\)\s+load=\(([^)]*)\)\s+delay=\(([^)]*)\)\s*$")
_KV = re.compile(r"(\w+)=(\S+)")


def parse_cell_library(text):
    lib = None
    cell = None
    ended = False
    fn_text = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        words = line.split()
        kw = words[0]
        if ended:
            raise SyntaxError_("text after 'end'", lineno, col)
        if lib is None:
            if kw != "library" or len(words) != 2:
                raise SyntaxError_(f"unexpected {line!r}", lineno, col, "library NAME")
            lib = CellLibrary(words[1])
            continue
        if kw == "end":
            if len(words) != 1:
                raise SyntaxError_("junk after 'end'", lineno, col)
            ended = True
        elif kw == "cell":
            m = re.fullmatch(r"cell\s+(\w+)\s+area=(\S+)", line)
            if not m:
                raise SyntaxError_(f"bad cell header {line!r}", lineno, col, "cell NAME area=F")
            if m.group(1) in lib.cells:
                raise SemanticError(f"cell {m.group(1)} defined twice", lineno, col)
            area = _floats(m.group(2), lineno, col)[0]
            if area < 0:
                raise SemanticError("area must be >= 0", lineno, col)
            cell = LibCellDef(m.group(1), area)
            lib.cells[cell.name] = cell
        elif cell is None:
            raise SyntaxError_(f"unexpected {kw!r} outside a cell", lineno, col, "cell")
        elif kw == "pin":
            m = re.fullmatch(r"pin\s+(\w+)\s+(in|out)\s+cap=(\S+)", line)
            if not m:
                raise SyntaxError_(f"bad pin line {line!r}", lineno, col, "pin NAME in|out cap=F")
            if any(p.name == m.group(1) for p in cell.pins):
                raise SemanticError(f"pin {m.group(1)} declared twice", lineno, col)
            cap = _floats(m.group(3), lineno, col)[0]
            if cap < 0:
                raise SemanticError("pin capacitance must be >= 0", lineno, col)
            cell.pins.append(LibPin(m.group(1), m.group(2), cap))
        elif kw == "function":
            m = re.fullmatch(r"function\s+(\w+)\s*=\s*(.+)", line)
            if not m:
                raise SyntaxError_(f"bad function line {line!r}", lineno, col, "function OUT = EXPR")
            ecol = col + line.index(m.group(2))
            cell.function = parse_expr(m.group(2), lineno, ecol)
            fn_text[cell.name] = (m.group(1), lineno, col)
        elif kw == "arc":
            m = _ARC.fullmatch(line)
            if not m:
                raise SyntaxError_(f"bad arc line {line!r}", lineno, col,
                                   "arc IN->OUT slew=(...) load=(...) delay=(...)")
            src, dst = m.group(1), m.group(2)
            slew = _floats(m.group(3), lineno, col)
            load = _floats(m.group(4), lineno, col)
            rows = tuple(_floats(r, lineno, col) for r in m.group(5).split(";"))
            for name, axis in (("slew", slew), ("load", load)):
                if any(b <= a for a, b in zip(axis, axis[1:])):
                    raise SemanticError(f"{name} axis must be strictly increasing", lineno, col)
            if len(rows) != len(slew) or any(len(r) != len(load) for r in rows):
                raise SemanticError("delay table shape does not match its axes", lineno, col)
            if any(v < 0 for r in rows for v in r):
                raise SemanticError("delay values must be >= 0", lineno, col)
            if src in cell.arcs:
                raise SemanticError(f"arc {src}->{dst} defined twice", lineno, col)
            cell.arcs[src] = DelayTable(slew, load, rows)
            fn_text.setdefault(("arc", cell.name, src), (dst, lineno, col))
        else:
            raise SyntaxError_(f"unexpected {kw!r}", lineno, col, "cell, pin, function, arc or end")
    if lib is None:
        raise SyntaxError_("empty input", 1, 1, "library")
    if not ended:
        raise SyntaxError_("missing 'end'", len(text.splitlines()) + 1, 1, "end")
    for c in lib.cells.values():
        _check_cell(c, fn_text)
    return lib


def _check_cell(c, info):
    loc = info.get(c.name, (None, None, None))[1:]
    outs = [p for p in c.pins if p.direction == "out"]
    if len(outs) != 1 or not c.inputs:
        raise SemanticError(f"cell {c.name} needs >= 1 input and exactly 1 output pin", *loc)
    if c.function is None:
        raise SemanticError(f"cell {c.name} has no function", *loc)
    if info[c.name][0] != outs[0].name:
        raise SemanticError(f"cell {c.name} function must define {outs[0].name}", *loc)
    extra = expr_vars(c.function) - set(c.inputs)
    if extra:
        raise SemanticError(f"cell {c.name} function uses undeclared pins {sorted(extra)}", *loc)
    for src in c.arcs:
        dst, ln, col = info[("arc", c.name, src)]
        if src not in c.inputs or dst != outs[0].name:
            raise SemanticError(f"cell {c.name}: arc {src}->{dst} is not input->output", ln, col)
    missing = [p for p in c.inputs if p not in c.arcs]
    if missing:
        raise SemanticError(f"cell {c.name} lacks timing arcs for {missing}", *loc)


def _num(v):
    return repr(float(v))


def write_cell_library(lib):
    lines = [f"library {lib.name}"]
    for c in lib.cells.values():
        lines.append(f"cell {c.name} area={_num(c.area)}")
        for p in c.pins:
            lines.append(f"pin {p.name} {p.direction} cap={_num(p.cap)}")
        lines.append(f"function {c.output} = {format_expr(c.function)}")
        for src in c.inputs:
            t = c.arcs[src]
            rows = ";".join(",".join(_num(v) for v in r) for r in t.values)
            lines.append(f"arc {src}->{c.output} slew=({','.join(_num(v) for v in t.slew)}) "
                         f"load=({','.join(_num(v) for v in t.load)}) delay=({rows})")
    lines.append("end")
    return "\n".join(lines) + "\n"


DATA_DIR = Path(__file__).parent / "data"


def load_library(path):
    with open(path) as f:
        return parse_cell_library(f.read())


def demo_library():
    """The bundled seven-cell demo library."""
    return load_library(DATA_DIR / "demo7.slf")
