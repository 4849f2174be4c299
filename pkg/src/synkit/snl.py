"""Structural netlist text format (``.snl``).

::

    module NAME
    input|output|wire NAME[W]
    cell KIND INST (PARAM=INT)* (.PIN(SIGEXPR))+
    end

``SIGEXPR`` is ``NAME``, ``NAME[i]``, ``NAME[m:l]``, a concatenation
``{e, ...}`` (MSB first) or a sized literal ``W'bBITS`` / ``W'hHEX`` /
``W'dDEC``.  Mapped cells use the kind ``LIB:CELLNAME`` and need the cell
library to resolve the output pin.  ``#`` starts a comment.
"""
import re

from .errors import CombinationalLoop, SemanticError, SyntaxError_
from .ir import (CELL_KINDS, ConstSeg, NetSeg, Netlist, SignalRef,
                 kind_inputs, kind_outputs, topo_order, validate)

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<const>\d+'[bBhHdD][0-9a-fA-F_]+)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<punct>[\[\]{}():,.=])
""", re.VERBOSE)


def _tokens(line, lineno):
    pos = 0
    out = []
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise SyntaxError_(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos + 1))
        pos = m.end()
    return out


class _Cursor:
    def __init__(self, toks, lineno):
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, self._endcol())

    def _endcol(self):
        if not self.toks:
            return 1
        k, v, c = self.toks[-1]
        return c + len(v)

    def take(self, kind=None, value=None, expected=None):
        k, v, c = self.peek()
        if k is None or (kind and k != kind) or (value is not None and v != value):
            want = expected or value or kind
            got = "end of line" if k is None else repr(v)
            raise SyntaxError_(f"unexpected {got}", self.lineno, c, want)
        self.i += 1
        return v

    def at(self, value):
        return self.peek()[1] == value

    def done(self):
        return self.i >= len(self.toks)


class _Full:
    """Whole-net reference; width resolved once all nets are declared."""

    __slots__ = ("net",)

    def __init__(self, net):
        self.net = net


def _parse_const(tok, lineno, col):
    w, rest = tok.split("'")
    width = int(w)
    base = rest[0].lower()
    digits = rest[1:].replace("_", "")
    try:
        value = int(digits, {"b": 2, "h": 16, "d": 10}[base])
    except ValueError:
        raise SyntaxError_(f"bad literal {tok!r}", lineno, col) from None
    if width < 1:
        raise SyntaxError_("literal width must be >= 1", lineno, col)
    if value >> width:
        raise SyntaxError_(f"literal {tok!r} does not fit {width} bits", lineno, col)
    return value, width


def _parse_sig(cur, nets, uses):
    k, v, col = cur.peek()
    if v == "{":
        cur.take()
        parts = [_parse_sig(cur, nets, uses)]
        while cur.at(","):
            cur.take()
            parts.append(_parse_sig(cur, nets, uses))
        cur.take(value="}")
        segs = []
        for p in parts:
            segs.extend(p)
        return segs
    if k == "const":
        cur.take()
        value, width = _parse_const(v, cur.lineno, col)
        return [ConstSeg((value >> i) & 1, 1) for i in reversed(range(width))]
    name = cur.take("ident", expected="signal")
    uses.append((name, cur.lineno, col))
    if cur.at("["):
        cur.take()
        msb = int(cur.take("num", expected="bit index"))
        lsb = msb
        if cur.at(":"):
            cur.take()
            lsb = int(cur.take("num", expected="bit index"))
        cur.take(value="]")
        if msb < lsb:
            raise SyntaxError_("slice must be [msb:lsb] with msb >= lsb", cur.lineno, col)
        return [NetSeg(name, msb, lsb)]
    return [_Full(name)]


def parse_netlist(text, lib=None):
    """Parse ``.snl`` text into a validated :class:`~synkit.ir.Netlist`."""
    nl = None
    ended = False
    cell_lines = {}
    uses = []
    pending = []  # (cell, pin, raw segments)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line, lineno)
        if not toks:
            continue
        cur = _Cursor(toks, lineno)
        kw = cur.take("ident", expected="keyword")
        if ended:
            raise SyntaxError_("text after 'end'", lineno, toks[0][2])
        if nl is None:
            if kw != "module":
                raise SyntaxError_(f"unexpected {kw!r}", lineno, toks[0][2], "module")
            nl = Netlist(cur.take("ident", expected="module name"))
        elif kw == "end":
            ended = True
        elif kw in ("input", "output", "wire"):
            name = cur.take("ident", expected="net name")
            width = 1
            if cur.at("["):
                cur.take()
                width = int(cur.take("num", expected="width"))
                cur.take(value="]")
            if width < 1:
                raise SemanticError(f"net {name} must be at least 1 bit", lineno, toks[1][2])
            if name in nl.nets:
                raise SemanticError(f"net {name} declared twice", lineno, toks[1][2])
            if kw == "wire":
                nl.add_net(name, width)
            else:
                nl.add_port(name, "in" if kw == "input" else "out", width)
        elif kw == "cell":
            kcol = cur.peek()[2]
            kind = cur.take("ident", expected="cell kind")
            libcell = None
            if kind == "LIB":
                cur.take(value=":")
                libcell = cur.take("ident", expected="library cell name")
            elif kind not in CELL_KINDS:
                raise SemanticError(f"unknown cell kind {kind!r}", lineno, kcol)
            inst = cur.take("ident", expected="instance name")
            if inst in nl.cells:
                raise SemanticError(f"cell {inst} declared twice", lineno, kcol)
            params = {}
            while cur.peek()[0] == "ident":
                pname = cur.take()
                cur.take(value="=")
                params[pname] = int(cur.take("num", expected="integer"))
            pins = {}
            while not cur.done():
                cur.take(value=".", expected=".PIN(...)")
                pin = cur.take("ident", expected="pin name")
                cur.take(value="(")
                segs = _parse_sig(cur, nl.nets, uses)
                cur.take(value=")")
                if pin in pins:
                    raise SemanticError(f"pin {pin} connected twice", lineno, kcol)
                pins[pin] = segs
            if not pins:
                raise SyntaxError_("cell needs at least one pin", lineno, cur._endcol(), ".PIN(...)")
            lib_output = None
            if libcell is not None:
                if lib is None:
                    raise SemanticError(f"mapped cell {inst} needs a cell library", lineno, kcol)
                if libcell not in lib.cells:
                    raise SemanticError(f"cell {libcell!r} not in library {lib.name}", lineno, kcol)
                lib_output = lib.cells[libcell].output
            cell = nl.add_cell("LIB" if libcell else kind, inst, {}, params, libcell, lib_output)
            cell_lines[inst] = (lineno, kcol)
            pending.append((cell, pins))
        else:
            raise SyntaxError_(f"unexpected {kw!r}", lineno, toks[0][2],
                               "input, output, wire, cell or end")
        if not cur.done() and kw in ("module", "end", "input", "output", "wire"):
            k, v, c = cur.peek()
            raise SyntaxError_(f"unexpected {v!r}", lineno, c, "end of line")
    if nl is None:
        raise SyntaxError_("empty input", 1, 1, "module")
    if not ended:
        raise SyntaxError_("missing 'end'", len(text.splitlines()) + 1, 1, "end")

    for name, ln, col in uses:
        if name not in nl.nets:
            raise SemanticError(f"undeclared net {name!r}", ln, col)
    for cell, pins in pending:
        resolved = {}
        for pin, segs in pins.items():
            fixed = []
            for s in segs:
                if isinstance(s, _Full):
                    fixed.append(NetSeg(s.net, nl.nets[s.net].width - 1, 0))
                else:
                    fixed.append(s)
            resolved[pin] = SignalRef(fixed)
        cell.pins = resolved

    problems = validate(nl)
    if problems:
        v = problems[0]
        loc = cell_lines.get(v.target, (None, None))
        raise SemanticError(f"{v.rule}: {v.target} {v.message}".strip(), *loc)
    return nl


# ------------------------------------------------------------------ writer

def format_sig(ref, nets):
    parts = []
    run = []

    def flush():
        if run:
            parts.append(f"{len(run)}'b" + "".join(str(b) for b in run))
            run.clear()

    for seg in ref.segments:
        if isinstance(seg, ConstSeg):
            run.extend([seg.bit] * seg.width)
            continue
        flush()
        full = nets[seg.net].width
        if seg.lsb == 0 and seg.msb == full - 1:
            parts.append(seg.net)
        elif seg.msb == seg.lsb:
            parts.append(f"{seg.net}[{seg.msb}]")
        else:
            parts.append(f"{seg.net}[{seg.msb}:{seg.lsb}]")
    flush()
    if len(parts) == 1:
        return parts[0]
    return "{" + ", ".join(parts) + "}"


def _pin_order(cell):
    if cell.kind == "LIB":
        return sorted(p for p in cell.pins if p != cell.lib_output) + [cell.lib_output]
    return list(kind_inputs(cell)) + list(kind_outputs(cell))


def write_netlist(nl):
    """Deterministic ``.snl`` text: ports in order, wires by name, cells topologically."""
    lines = [f"module {nl.name}"]
    port_names = set()
    for p in nl.ports:
        port_names.add(p.name)
        lines.append(f"{'input' if p.direction == 'in' else 'output'} {p.name}[{p.width}]")
    for name in sorted(n for n in nl.nets if n not in port_names):
        lines.append(f"wire {name}[{nl.nets[name].width}]")
    try:
        order = topo_order(nl)
    except CombinationalLoop:
        order = sorted(nl.cells)
    for name in order:
        c = nl.cells[name]
        words = ["cell", c.type_name, c.name]
        words += [f"{k}={c.params[k]}" for k in sorted(c.params)]
        words += [f".{p}({format_sig(c.pins[p], nl.nets)})" for p in _pin_order(c)]
        lines.append(" ".join(words))
    lines.append("end")
    return "\n".join(lines) + "\n"


def read_netlist_file(path, lib=None):
    with open(path) as f:
        return parse_netlist(f.read(), lib)
