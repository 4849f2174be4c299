"""Gate-level netlist model.

A :class:`Netlist` is one flat module: ports, multi-bit nets, and cells whose
pins connect to :class:`SignalRef` values (concatenations of net slices and
constant runs).  Bits are addressed LSB-first as ``(net, index)`` tuples, or
the ints ``0``/``1`` for constants.

Registers (``DFF``) are cut points: Q acts as a pseudo primary input and
D/CLK as pseudo primary outputs for every combinational analysis.
"""
import heapq
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import CombinationalLoop, UnmappedCell

GENERIC_GATES = {
    "BUF": ("A",),
    "NOT": ("A",),
    "AND": ("A", "B"),
    "OR": ("A", "B"),
    "XOR": ("A", "B"),
    "NAND": ("A", "B"),
    "NOR": ("A", "B"),
    "XNOR": ("A", "B"),
    "MUX": ("A", "B", "S"),
}

WORD_CELLS = {
    "SHIFTX": ("A", "S"),
    "ADD": ("A", "B"),
    "SUB": ("A", "B"),
    "MUL": ("A", "B"),
    "MACC": ("A", "B", "C", "D"),
}

CELL_KINDS = tuple(GENERIC_GATES) + ("DFF",) + tuple(WORD_CELLS) + ("LIB",)


def kind_inputs(cell):
    if cell.kind in GENERIC_GATES:
        return GENERIC_GATES[cell.kind]
    if cell.kind in WORD_CELLS:
        return WORD_CELLS[cell.kind]
    if cell.kind == "DFF":
        return ("D", "CLK")
    if cell.kind == "LIB":
        return tuple(p for p in cell.pins if p != cell.lib_output)
    raise KeyError(cell.kind)


def kind_outputs(cell):
    if cell.kind == "DFF":
        return ("Q",)
    if cell.kind == "LIB":
        return (cell.lib_output,)
    return ("Y",)


def width_params(kind):
    """Parameter names a word-level kind must carry (one ``P_WIDTH`` per pin)."""
    if kind not in WORD_CELLS:
        return ()
    return tuple(p + "_WIDTH" for p in WORD_CELLS[kind]) + ("Y_WIDTH",)


def pin_width(cell, pin):
    if cell.kind in WORD_CELLS:
        return cell.params.get(pin + "_WIDTH")
    return 1


def macc_width(wa, wb, wc, wd):
    return max(wa + wb, wc, wd) + 2


# ------------------------------------------------------------------ signals

class NetSeg(NamedTuple):
    net: str
    msb: int
    lsb: int

    @property
    def width(self):
        return self.msb - self.lsb + 1


class ConstSeg(NamedTuple):
    bit: int
    width: int


def _bit_key(b):
    return (0, b, 0) if isinstance(b, int) else (1, b[0], b[1])


class SignalRef:
    """Concatenation of net slices and constant runs, MSB segment first.

    Always stored in normal form: adjacent slices of one net are merged and
    constants are split into runs of equal bits, so structurally equal
    signals compare equal.
    """

    __slots__ = ("segments", "_bits")

    def __init__(self, segments=()):
        bits = []
        for seg in reversed(tuple(segments)):
            if isinstance(seg, ConstSeg):
                bits.extend([seg.bit] * seg.width)
            else:
                bits.extend((seg.net, i) for i in range(seg.lsb, seg.msb + 1))
        self._bits = tuple(bits)
        self.segments = _segments_of(self._bits)

    @classmethod
    def from_bits(cls, bits):
        ref = cls.__new__(cls)
        ref._bits = tuple(bits)
        ref.segments = _segments_of(ref._bits)
        return ref

    @classmethod
    def of_net(cls, name, width):
        return cls((NetSeg(name, width - 1, 0),))

    @classmethod
    def const(cls, value, width):
        return cls.from_bits([(value >> i) & 1 for i in range(width)])

    @property
    def width(self):
        return len(self._bits)

    def bits(self):
        """Bits LSB-first."""
        return self._bits

    def nets(self):
        return {s.net for s in self.segments if isinstance(s, NetSeg)}

    def is_const(self):
        return all(isinstance(b, int) for b in self._bits)

    def const_value(self):
        return sum(b << i for i, b in enumerate(self._bits))

    def __getitem__(self, item):
        if isinstance(item, slice):
            return SignalRef.from_bits(self._bits[item])
        return SignalRef.from_bits((self._bits[item],))

    def __eq__(self, other):
        return isinstance(other, SignalRef) and self.segments == other.segments

    def __hash__(self):
        return hash(self.segments)

    def __len__(self):
        return len(self._bits)

    def __repr__(self):
        return f"SignalRef({list(self.segments)!r})"


def _segments_of(bits):
    segs = []
    # walk MSB -> LSB, growing runs downward
    for b in reversed(bits):
        if segs:
            last = segs[-1]
            if isinstance(b, int):
                if isinstance(last, ConstSeg) and last.bit == b:
                    segs[-1] = ConstSeg(b, last.width + 1)
                    continue
            elif isinstance(last, NetSeg) and last.net == b[0] and last.lsb == b[1] + 1:
                segs[-1] = NetSeg(last.net, last.msb, b[1])
                continue
        if isinstance(b, int):
            segs.append(ConstSeg(b, 1))
        else:
            segs.append(NetSeg(b[0], b[1], b[1]))
    return tuple(segs)


# -------------------------------------------------------------------- model

@dataclass
class Port:
    name: str
    direction: str  # "in" | "out"
    width: int = 1


@dataclass
class Net:
    name: str
    width: int = 1


@dataclass
class Cell:
    kind: str
    name: str
    params: dict = field(default_factory=dict)
    pins: dict = field(default_factory=dict)
    libcell: Optional[str] = None
    lib_output: Optional[str] = None

    @property
    def type_name(self):
        return f"LIB:{self.libcell}" if self.kind == "LIB" else self.kind


@dataclass
class Violation:
    rule: str
    target: str
    message: str = ""


@dataclass
class Netlist:
    name: str
    ports: list = field(default_factory=list)
    nets: dict = field(default_factory=dict)
    cells: dict = field(default_factory=dict)

    # -- construction helpers
    def add_port(self, name, direction, width=1):
        self.ports.append(Port(name, direction, width))
        self.nets[name] = Net(name, width)
        return SignalRef.of_net(name, width)

    def add_net(self, name, width=1):
        self.nets[name] = Net(name, width)
        return SignalRef.of_net(name, width)

    def add_cell(self, kind, name, pins, params=None, libcell=None, lib_output=None):
        pins = {p: (s if isinstance(s, SignalRef) else SignalRef.from_bits(s))
                for p, s in pins.items()}
        cell = Cell(kind, name, dict(params or {}), pins, libcell, lib_output)
        self.cells[name] = cell
        return cell

    def sig(self, name):
        return SignalRef.of_net(name, self.nets[name].width)

    def port(self, name):
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(name)

    def inputs(self):
        return [p for p in self.ports if p.direction == "in"]

    def outputs(self):
        return [p for p in self.ports if p.direction == "out"]

    def copy(self):
        return Netlist(
            self.name,
            [Port(p.name, p.direction, p.width) for p in self.ports],
            {k: Net(n.name, n.width) for k, n in self.nets.items()},
            {k: Cell(c.kind, c.name, dict(c.params), dict(c.pins), c.libcell, c.lib_output)
             for k, c in self.cells.items()},
        )

    def fresh(self, prefix):
        """A name unused by nets and cells."""
        n = getattr(self, "_fresh_counter", 0)
        while True:
            cand = f"{prefix}{n}"
            n += 1
            if cand not in self.nets and cand not in self.cells:
                self._fresh_counter = n
                return cand

    # -- connectivity
    def drivers(self):
        """bit -> (cell name, pin, position) or ("", port name, position)."""
        drv = {}
        for p in self.ports:
            if p.direction == "in":
                for i in range(p.width):
                    drv[(p.name, i)] = ("", p.name, i)
        for c in self.cells.values():
            for pin in kind_outputs(c):
                ref = c.pins.get(pin)
                if ref is None:
                    continue
                for i, b in enumerate(ref.bits()):
                    if not isinstance(b, int):
                        drv.setdefault(b, (c.name, pin, i))
        return drv

    def readers(self):
        """bit -> list of (cell name, pin); output-port bits read as ("", port)."""
        rd = {}
        for c in self.cells.values():
            for pin in kind_inputs(c):
                ref = c.pins.get(pin)
                if ref is None:
                    continue
                for b in ref.bits():
                    if not isinstance(b, int):
                        rd.setdefault(b, []).append((c.name, pin))
        for p in self.outputs():
            for i in range(p.width):
                rd.setdefault((p.name, i), []).append(("", p.name))
        return rd

    def __eq__(self, other):
        if not isinstance(other, Netlist):
            return NotImplemented
        return (self.name == other.name and self.ports == other.ports
                and self.nets == other.nets and self.cells == other.cells)


def output_bits(nl):
    return [(p.name, i) for p in nl.outputs() for i in range(p.width)]


def input_bits(nl):
    return [(p.name, i) for p in nl.inputs() for i in range(p.width)]


# --------------------------------------------------------------- validation

def validate(nl):
    """Check all structural invariants; returns a list of :class:`Violation`."""
    out = []
    seen_ports = set()
    for p in nl.ports:
        if p.name in seen_ports:
            out.append(Violation("duplicate-port", p.name))
        seen_ports.add(p.name)
        if p.direction not in ("in", "out"):
            out.append(Violation("port-direction", p.name, p.direction))
        net = nl.nets.get(p.name)
        if net is None or net.width != p.width or p.width < 1:
            out.append(Violation("port-net", p.name, "port needs a net of equal width"))
    for n in nl.nets.values():
        if n.width < 1:
            out.append(Violation("net-width", n.name))

    driven = {}
    for p in nl.inputs():
        for i in range(p.width):
            driven[(p.name, i)] = [p.name]

    for c in nl.cells.values():
        if c.kind not in CELL_KINDS:
            out.append(Violation("unknown-kind", c.name, c.kind))
            continue
        if c.kind == "LIB" and (not c.libcell or c.lib_output not in c.pins):
            out.append(Violation("lib-cell", c.name, "mapped cell lacks library binding"))
            continue
        want = set(kind_inputs(c)) | set(kind_outputs(c))
        if set(c.pins) != want:
            out.append(Violation("pin-set", c.name, f"expected {sorted(want)}"))
            continue
        if set(c.params) != set(width_params(c.kind)):
            out.append(Violation("param-set", c.name, f"expected {sorted(width_params(c.kind))}"))
            continue
        for pin, ref in c.pins.items():
            w = pin_width(c, pin)
            if ref.width != w:
                out.append(Violation("width-mismatch", c.name,
                                     f"pin {pin} declared {w} bits, connected {ref.width}"))
            for seg in ref.segments:
                if isinstance(seg, NetSeg):
                    net = nl.nets.get(seg.net)
                    if net is None:
                        out.append(Violation("undeclared-net", c.name, seg.net))
                    elif seg.msb >= net.width or seg.lsb < 0 or seg.msb < seg.lsb:
                        out.append(Violation("index-range", c.name,
                                             f"{seg.net}[{seg.msb}:{seg.lsb}]"))
        for pin in kind_outputs(c):
            for b in c.pins[pin].bits():
                if isinstance(b, int):
                    out.append(Violation("const-output", c.name, pin))
                else:
                    driven.setdefault(b, []).append(c.name)
        p = c.params
        if c.kind == "SHIFTX" and p.get("Y_WIDTH", 0) > p.get("A_WIDTH", 0):
            out.append(Violation("shiftx-width", c.name, "Y_WIDTH must be <= A_WIDTH"))
        if c.kind == "MACC":
            need = macc_width(p["A_WIDTH"], p["B_WIDTH"], p["C_WIDTH"], p["D_WIDTH"])
            if p["Y_WIDTH"] != need:
                out.append(Violation("macc-width", c.name, f"Y_WIDTH must be {need}"))

    for b, ds in driven.items():
        if len(ds) > 1:
            out.append(Violation("multiple-drivers", f"{b[0]}[{b[1]}]", ",".join(ds)))
    used = set(output_bits(nl))
    for c in nl.cells.values():
        if c.kind not in CELL_KINDS or set(c.pins) != set(kind_inputs(c)) | set(kind_outputs(c)):
            continue
        for pin in kind_inputs(c):
            used.update(b for b in c.pins[pin].bits() if not isinstance(b, int))
    for b in sorted(used - set(driven), key=_bit_key):
        if b[0] in nl.nets and b[1] < nl.nets[b[0]].width:
            out.append(Violation("undriven", f"{b[0]}[{b[1]}]"))
    if not out:
        try:
            topo_order(nl)
        except CombinationalLoop as e:
            out.append(Violation("combinational-loop", e.cycle[0], " -> ".join(e.cycle)))
    return out


# ---------------------------------------------------------------- traversal

def _comb_fanin(nl, drv=None):
    drv = drv if drv is not None else nl.drivers()
    fanin = {}
    for c in nl.cells.values():
        if c.kind == "DFF":
            continue
        srcs = set()
        for pin in kind_inputs(c):
            for b in c.pins[pin].bits():
                if isinstance(b, int):
                    continue
                d = drv.get(b)
                if d and d[0] and nl.cells[d[0]].kind != "DFF":
                    srcs.add(d[0])
        fanin[c.name] = srcs
    return fanin


def topo_order(nl):
    """Cells ordered so every combinational driver precedes its readers.

    Registers come first (their Q outputs are sources).  Ties break by cell
    name, so the order is deterministic.
    """
    fanin = _comb_fanin(nl)
    fanout = {n: [] for n in fanin}
    indeg = {}
    for n, srcs in fanin.items():
        indeg[n] = len(srcs)
        for s in srcs:
            fanout[s].append(n)
    order = sorted(n for n, c in nl.cells.items() if c.kind == "DFF")
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for m in fanout[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(order) != len(nl.cells):
        rest = {n for n, d in indeg.items() if d > 0}
        raise CombinationalLoop(_find_cycle(fanin, rest))
    return order


def _find_cycle(fanin, nodes):
    start = min(nodes)
    path, index = [], {}
    n = start
    while n not in index:
        index[n] = len(path)
        path.append(n)
        n = min(s for s in fanin[n] if s in nodes)
    cyc = path[index[n]:]
    return list(reversed(cyc)) + [cyc[-1]]


def stats(nl):
    """Per-kind cell counts plus ``generic`` (generic-gate total) and ``total``."""
    cnt = Counter(c.type_name for c in nl.cells.values())
    res = {k: cnt.get(k, 0) for k in CELL_KINDS if k != "LIB"}
    for k, v in sorted(cnt.items()):
        if k.startswith("LIB:"):
            res[k] = v
    res["generic"] = sum(cnt.get(k, 0) for k in GENERIC_GATES)
    res["total"] = len(nl.cells)
    return res


DEPTH_WEIGHT = {k: 1 for k in GENERIC_GATES}
DEPTH_WEIGHT["BUF"] = 0


def logic_depth(nl):
    """Gates on the longest combinational path (BUF counts as a wire)."""
    drv = nl.drivers()
    level = {}
    for name in topo_order(nl):
        c = nl.cells[name]
        if c.kind == "DFF":
            continue
        if c.kind in WORD_CELLS:
            raise UnmappedCell(c.name, c.kind)
        best = 0
        for pin in kind_inputs(c):
            for b in c.pins[pin].bits():
                if isinstance(b, int):
                    continue
                d = drv.get(b)
                if d and d[0]:
                    best = max(best, level.get(d[0], 0))
        level[name] = best + DEPTH_WEIGHT.get(c.kind, 1)
    return max(level.values(), default=0)


# ---------------------------------------------------------------- rewriting

def rewire(nl, mapping, remove=()):
    """New netlist with ``remove`` cells dropped and bits substituted.

    ``mapping`` sends bits whose driver disappears to their replacement
    (another bit or a constant).  Output-port bits that lose their driver
    get a BUF from the replacement.
    """
    remove = set(remove)

    def resolve(b):
        seen = 0
        while not isinstance(b, int) and b in mapping:
            b = mapping[b]
            seen += 1
            if seen > len(mapping) + 1:
                raise RuntimeError("cyclic substitution")
        return b

    res = Netlist(nl.name, [Port(p.name, p.direction, p.width) for p in nl.ports],
                  {k: Net(n.name, n.width) for k, n in nl.nets.items()}, {})
    for name, c in nl.cells.items():
        if name in remove:
            continue
        pins = dict(c.pins)
        if mapping:
            for pin in kind_inputs(c):
                ref = pins[pin]
                if any(not isinstance(b, int) and b in mapping for b in ref.bits()):
                    pins[pin] = SignalRef.from_bits([resolve(b) for b in ref.bits()])
        res.cells[name] = Cell(c.kind, c.name, dict(c.params), pins, c.libcell, c.lib_output)
    for b in output_bits(nl):
        if b in mapping:
            r = resolve(b)
            if r != b:
                res.add_cell("BUF", res.fresh("buf"), {"A": [r], "Y": [b]})
    return res


def prune_nets(nl):
    """Drop wire nets nothing references (ports always stay)."""
    used = {p.name for p in nl.ports}
    for c in nl.cells.values():
        for ref in c.pins.values():
            used.update(ref.nets())
    nl.nets = {k: v for k, v in nl.nets.items() if k in used}
    return nl


class Builder:
    """Emits 1-bit generic gates into a netlist.

    Identical gates are shared.  With ``fold=True`` constant inputs are
    simplified on the fly; with ``fold=False`` the raw structure is kept so a
    later constant-propagation pass has something to do.
    """

    def __init__(self, nl, prefix="g", fold=True):
        self.nl = nl
        self.prefix = prefix
        self.fold = fold
        self._cache = {}
        self._not_of = {}
        self._n = 0

    def _emit(self, kind, ins):
        key = (kind,) + tuple(ins)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        while True:
            name = f"{self.prefix}{self._n}"
            self._n += 1
            if name not in self.nl.nets and name not in self.nl.cells:
                break
        self.nl.nets[name] = Net(name, 1)
        out = (name, 0)
        pins = {p: SignalRef.from_bits((b,)) for p, b in zip(GENERIC_GATES[kind], ins)}
        pins["Y"] = SignalRef.from_bits((out,))
        self.nl.cells[name] = Cell(kind, name, {}, pins)
        self._cache[key] = out
        if kind == "NOT":
            self._not_of[out] = ins[0]
        return out

    def _sym(self, a, b):
        return (a, b) if _bit_key(a) <= _bit_key(b) else (b, a)

    def buf(self, a):
        return self._emit("BUF", (a,))

    def not_(self, a):
        if self.fold:
            if isinstance(a, int):
                return 1 - a
            if a in self._not_of:
                return self._not_of[a]
        return self._emit("NOT", (a,))

    def and_(self, a, b):
        if self.fold:
            if a == 0 or b == 0:
                return 0
            if a == 1:
                return b
            if b == 1 or a == b:
                return a
            if self._not_of.get(a) == b or self._not_of.get(b) == a:
                return 0
        return self._emit("AND", self._sym(a, b))

    def or_(self, a, b):
        if self.fold:
            if a == 1 or b == 1:
                return 1
            if a == 0:
                return b
            if b == 0 or a == b:
                return a
            if self._not_of.get(a) == b or self._not_of.get(b) == a:
                return 1
        return self._emit("OR", self._sym(a, b))

    def xor(self, a, b):
        if self.fold:
            if a == 0:
                return b
            if b == 0:
                return a
            if a == 1:
                return self.not_(b)
            if b == 1:
                return self.not_(a)
            if a == b:
                return 0
        return self._emit("XOR", self._sym(a, b))

    def xnor(self, a, b):
        if self.fold:
            return self.not_(self.xor(a, b))
        return self._emit("XNOR", self._sym(a, b))

    def nand(self, a, b):
        if self.fold:
            return self.not_(self.and_(a, b))
        return self._emit("NAND", self._sym(a, b))

    def nor(self, a, b):
        if self.fold:
            return self.not_(self.or_(a, b))
        return self._emit("NOR", self._sym(a, b))

    def mux(self, a, b, s):
        """``s ? b : a``."""
        if self.fold:
            if s == 0 or a == b:
                return a
            if s == 1:
                return b
            if a == 0 and b == 1:
                return s
            if a == 1 and b == 0:
                return self.not_(s)
            if a == 0:
                return self.and_(s, b)
            if b == 0:
                return self.and_(a, self.not_(s))
            if a == 1:
                return self.or_(self.not_(s), b)
            if b == 1:
                return self.or_(a, s)
        return self._emit("MUX", (a, b, s))

    def drive(self, bits, target):
        """Connect computed ``bits`` onto existing net bits ``target`` via BUFs."""
        for b, t in zip(bits, target):
            self.nl.add_cell("BUF", self.nl.fresh(self.prefix + "b"),
                             {"A": [b], "Y": [t]})
