"""Delay-model compilation and cut-based standard-cell mapping.

A library arc is a 2-D table over (input slew, output load).  Mapping and
timing use a linearised form of each arc: an intrinsic delay taken at one
operating point plus a load slope.  The operating point comes from two
global knobs: the input slew, and a gain that sets the reference load to
``gain`` times the cell's own average input capacitance.
"""
import math
from dataclasses import dataclass, field
from itertools import permutations

from .aig import Cut, cut_truth, enumerate_cuts, shell_of, _parse_bitname
from .errors import SlewOutOfRange, UnmatchableFunction, UsageError
from .ir import Cell, Net, Netlist, Port, SignalRef, topo_order
from .npn import NpnTransform, apply_transform, full_mask, shrink, support


@dataclass(frozen=True)
class DelayParams:
    slew: float = 20.0
    gain: float = 3.0
    delay_target: float = None


@dataclass(frozen=True)
class Arc:
    intrinsic: float
    slope: float

    def delay(self, load):
        return self.intrinsic + self.slope * load


@dataclass
class CompiledTiming:
    arcs: dict = field(default_factory=dict)  # (cell, input pin) -> Arc
    params: DelayParams = None
    unit: bool = False

    def arc(self, cell, pin):
        return self.arcs[(cell, pin)]

    def min_intrinsic(self):
        return min((a.intrinsic for a in self.arcs.values()), default=0.0)


def _check_slew(lib, slew):
    for c in lib.cells.values():
        for pin, t in c.arcs.items():
            if len(t.slew) > 1 and not t.slew[0] <= slew <= t.slew[-1]:
                raise SlewOutOfRange(
                    f"slew {slew} outside [{t.slew[0]}, {t.slew[-1]}] of {c.name} {pin}")


def compile_timing(lib, params=DelayParams()):
    """Linearise every arc of ``lib`` at the operating point of ``params``."""
    if not params.gain > 0:
        raise UsageError(f"gain must be > 0, got {params.gain}")
    _check_slew(lib, params.slew)
    arcs = {}
    for c in lib.cells.values():
        load0 = params.gain * c.avg_input_cap()
        for pin in c.inputs:
            t = c.arcs[pin]
            span = t.load[-1] - t.load[0] if len(t.load) > 1 else 1.0
            h = 1e-3 * max(span, 1e-9)
            intrinsic = t.lookup(params.slew, load0)
            slope = (t.lookup(params.slew, load0 + h) - t.lookup(params.slew, load0 - h)) / (2 * h)
            arcs[(c.name, pin)] = Arc(max(0.0, intrinsic), max(0.0, slope))
    return CompiledTiming(arcs, params)


def unit_timing(lib):
    """Every arc costs one unit regardless of load: the uncalibrated model."""
    arcs = {(c.name, p): Arc(1.0, 0.0) for c in lib.cells.values() for p in c.inputs}
    return CompiledTiming(arcs, None, unit=True)


# ------------------------------------------------------------------ matching

@dataclass(frozen=True)
class Match:
    cell: str
    pins: tuple  # per cell input, in order: (pin name, leaf index, complemented)


def match_table(lib, max_arity=4):
    """(k, tt) -> matches, for every input permutation and negation of each cell.

    Cells whose function ignores an input are skipped; so are cells wider
    than ``max_arity``.
    """
    table = {}
    for c in lib.cells.values():
        ins = c.inputs
        k = len(ins)
        if k > max_arity:
            continue
        tt = c.truth_table()
        if len(support(tt, k)) != k:
            continue
        for perm in permutations(range(k)):
            for mask in range(1 << k):
                g = apply_transform(tt, k, NpnTransform(perm, mask, 0))
                pins = tuple((ins[i], perm[i], (mask >> i) & 1) for i in range(k))
                lst = table.setdefault((k, g), [])
                if all(m.pins != pins or m.cell != c.name for m in lst):
                    lst.append(Match(c.name, pins))
    return table


def _inverters(lib):
    return [c.name for c in lib.cells.values() if len(c.inputs) == 1 and c.truth_table() == 0b01]


def check_library(lib):
    """Raise :class:`UnmatchableFunction` unless ``lib`` has an inverter and a
    two-input AND-class gate (AND/NAND/OR/NOR up to input negation)."""
    if not _inverters(lib):
        raise UnmatchableFunction(f"library {lib.name} has no inverter")
    and_class = {0x8, 0x7, 0xE, 0x1, 0x4, 0x2, 0xB, 0xD}
    if not any(len(c.inputs) == 2 and c.truth_table() in and_class for c in lib.cells.values()):
        raise UnmatchableFunction(f"library {lib.name} has no two-input AND-class gate")


def library_arity(lib):
    return min(4, max(len(c.inputs) for c in lib.cells.values()))


# ------------------------------------------------------------------- mapping

INF = math.inf


@dataclass
class _Choice:
    arr: float
    flow: float
    kind: str  # "pi", "cell", "inv"
    cell: str = None
    leaves: tuple = ()  # (pin, node, phase) for "cell"


class _Mapper:
    def __init__(self, aig, lib, timing):
        check_library(lib)
        self.aig = aig
        self.lib = lib
        self.timing = timing
        self.K = library_arity(lib)
        self.table = match_table(lib, self.K)
        self.cuts = enumerate_cuts(aig, K=self.K, C=8)
        caps = [p.cap for c in lib.cells.values() for p in c.pins if p.direction == "in"]
        self.avg_cap = sum(caps) / len(caps)
        self.refs = [0] * aig.num_nodes()
        for n in range(aig.npi + 1, aig.num_nodes()):
            self.refs[aig.f0[n] >> 1] += 1
            self.refs[aig.f1[n] >> 1] += 1
        self.invs = _inverters(lib)
        self.order = {name: i for i, name in enumerate(lib.cells)}

    def load(self, n):
        return self.refs[n] * self.avg_cap

    def arc_delay(self, cell, pin, n):
        return self.timing.arc(cell, pin).delay(self.load(n))

    def _candidates(self, n, best):
        """Direct implementations of node ``n`` per phase, from its cuts."""
        aig = self.aig
        cands = ([], [])
        cuts = list(self.cuts[n][1:])
        fan = tuple(sorted({aig.f0[n] >> 1, aig.f1[n] >> 1}))
        if all(c.leaves != fan for c in cuts):
            c = Cut(n, fan, 0)
            cuts.append(Cut(n, fan, cut_truth(aig, c)))
        for cut in cuts:
            k = len(cut.leaves)
            sup = support(cut.tt, k)
            if not sup:
                continue
            tt = shrink(cut.tt, k, sup) if len(sup) < k else cut.tt
            leaves = tuple(cut.leaves[i] for i in sup)
            ks = len(sup)
            for phase in (0, 1):
                g = tt ^ (full_mask(ks) if phase else 0)
                for m in self.table.get((ks, g), ()):
                    pins = tuple((p, leaves[li], ph) for p, li, ph in m.pins)
                    cands[phase].append((m.cell, pins))
        return cands

    def _eval(self, n, cell, pins, best):
        arr = 0.0
        flow = self.lib.cells[cell].area
        for p, leaf, ph in pins:
            src = best[leaf][ph]
            arr = max(arr, src.arr + self.arc_delay(cell, p, n))
            flow += src.flow / max(1, self.refs[leaf])
        return arr, flow

    def run(self, required=None):
        """Select per (node, phase).  Without ``required`` minimise arrival;
        with it, minimise area flow subject to arrival <= required."""
        aig = self.aig
        best = [[None, None] for _ in range(aig.num_nodes())]
        best[0] = [_Choice(0.0, 0.0, "pi"), _Choice(0.0, 0.0, "pi")]
        for n in range(1, aig.npi + 1):
            best[n][0] = _Choice(0.0, 0.0, "pi")
            best[n][1] = self._inv_choice(n, best[n][0], None if required is None else required[n][1])
        for n in range(aig.npi + 1, aig.num_nodes()):
            direct = [None, None]
            cands = self._candidates(n, best)
            for phase in (0, 1):
                req = None if required is None else required[n][phase]
                pick = None
                for cell, pins in cands[phase]:
                    arr, flow = self._eval(n, cell, pins, best)
                    ch = _Choice(arr, flow, "cell", cell, pins)
                    if self._better(ch, pick, req):
                        pick = ch
                direct[phase] = pick
            for phase in (0, 1):
                req = None if required is None else required[n][phase]
                pick = direct[phase]
                other = direct[1 - phase]
                if other is not None:
                    via = self._inv_choice(n, other, req)
                    if self._better(via, pick, req):
                        pick = via
                best[n][phase] = pick
        return best

    def _inv_choice(self, n, src, req):
        pick = None
        for cell in self.invs:
            pin = self.lib.cells[cell].inputs[0]
            arr = src.arr + self.arc_delay(cell, pin, n)
            ch = _Choice(arr, self.lib.cells[cell].area + src.flow, "inv", cell)
            if self._better(ch, pick, req):
                pick = ch
        return pick

    def _better(self, ch, cur, req):
        if ch is None:
            return False
        if cur is None:
            return True
        if req is None:
            return (ch.arr, ch.flow, self.order[ch.cell]) < (cur.arr, cur.flow, self.order.get(cur.cell, -1))
        ok_new = ch.arr <= req + 1e-9 * max(1.0, abs(req))
        ok_cur = cur.arr <= req + 1e-9 * max(1.0, abs(req))
        if ok_new != ok_cur:
            return ok_new
        if not ok_new:
            return ch.arr < cur.arr
        return (ch.flow, ch.arr) < (cur.flow, cur.arr)

    # -- covers
    def cover(self, best):
        """The (node, phase) pairs needed by the outputs, with their choices."""
        need = {}
        stack = [(l >> 1, l & 1) for _, l in self.aig.pos]
        while stack:
            key = stack.pop()
            if key in need:
                continue
            n, ph = key
            ch = best[n][ph]
            need[key] = ch
            if n == 0:
                continue
            if ch.kind == "inv":
                stack.append((n, 1 - ph))
            elif ch.kind == "cell":
                stack.extend((leaf, lph) for _, leaf, lph in ch.leaves)
        return need

    def cover_area(self, need):
        return sum(self.lib.cells[ch.cell].area for ch in need.values() if ch.kind != "pi")

    def required_times(self, need, target):
        req = [[INF, INF] for _ in range(self.aig.num_nodes())]
        for _, l in self.aig.pos:
            req[l >> 1][l & 1] = target
        # inverted phases feed from their sibling, so handle them first per node
        keys = sorted(need, key=lambda k: (-k[0], need[k].kind != "inv"))
        for n, ph in keys:
            ch = need[(n, ph)]
            r = req[n][ph]
            if ch.kind == "inv":
                pin = self.lib.cells[ch.cell].inputs[0]
                req[n][1 - ph] = min(req[n][1 - ph], r - self.arc_delay(ch.cell, pin, n))
            elif ch.kind == "cell":
                for p, leaf, lph in ch.leaves:
                    req[leaf][lph] = min(req[leaf][lph], r - self.arc_delay(ch.cell, p, n))
        return req

    def arrival(self, best):
        return max((best[l >> 1][l & 1].arr for _, l in self.aig.pos if l >> 1), default=0.0)


def map_cells(aig, lib, timing, delay_target=None, max_fanout=8):
    """Map ``aig`` onto ``lib`` cells.

    Covers are chosen for minimum estimated arrival.  With ``delay_target``
    a second pass recovers area wherever the slack allows, and the smaller of
    the two covers is kept.  High-fanout nets are then split by
    :func:`buffer_fanout` (``max_fanout=None`` skips that step).
    """
    m = _Mapper(aig, lib, timing)
    best = m.run()
    need = m.cover(best)
    if delay_target is not None:
        target = max(float(delay_target), m.arrival(best))
        req = m.required_times(need, target)
        rec = m.run(required=req)
        need_rec = m.cover(rec)
        if m.cover_area(need_rec) <= m.cover_area(need):
            need = need_rec
    nl = _emit(aig, lib, need)
    if max_fanout:
        nl = buffer_fanout(nl, lib, timing, max_fanout)
    return nl


def _emit(aig, lib, need):
    shell = shell_of(aig)
    nl = Netlist(shell.name, [Port(p.name, p.direction, p.width) for p in shell.ports],
                 dict(shell.nets), {})
    prefix = "_m"
    while any(n.startswith(prefix) for n in list(nl.nets) + list(shell.cells)):
        prefix = "_" + prefix
    pi_bit = {}
    for idx, pname in enumerate(aig.pi_names, 1):
        if pname.endswith(".Q"):
            pi_bit[idx] = shell.cells[pname[:-2]].pins["Q"].bits()[0]
        else:
            pi_bit[idx] = _parse_bitname(pname)

    owner = {}
    port_pos = []
    for pname, l in aig.pos:
        if "." in pname:
            continue
        b = _parse_bitname(pname)
        port_pos.append((b, l))
        key = (l >> 1, l & 1)
        if key[0] and need[key].kind != "pi":
            owner.setdefault(key, b)

    def bit(key):
        n, ph = key
        if n == 0:
            return ph
        if need[key].kind == "pi":
            return pi_bit[n]
        return owner.get(key, (f"{prefix}{n}{'n' if ph else ''}", 0))

    for key in sorted(need):
        ch = need[key]
        if ch.kind == "pi" or key[0] == 0:
            continue
        n, ph = key
        out = bit(key)
        if out[0].startswith(prefix):
            nl.nets[out[0]] = Net(out[0], 1)
        d = lib.cells[ch.cell]
        if ch.kind == "inv":
            pins = {d.inputs[0]: [bit((n, 1 - ph))]}
        else:
            pins = {p: [bit((leaf, lph))] for p, leaf, lph in ch.leaves}
        pins[d.output] = [out]
        nl.add_cell("LIB", f"{prefix}c{n}{'n' if ph else ''}", pins, libcell=ch.cell,
                    lib_output=d.output)
    k = 0
    for b, l in port_pos:
        src = bit((l >> 1, l & 1))
        if src != b:
            nl.add_cell("BUF", f"{prefix}buf{k}", {"A": [src], "Y": [b]})
            k += 1
    po = dict(aig.pos)
    for cname, c in shell.cells.items():
        d_lit, c_lit = po[f"{cname}.D"], po[f"{cname}.CLK"]
        nl.cells[cname] = Cell("DFF", cname, {}, {
            "D": SignalRef.from_bits([bit((d_lit >> 1, d_lit & 1))]),
            "CLK": SignalRef.from_bits([bit((c_lit >> 1, c_lit & 1))]),
            "Q": c.pins["Q"]})
    return nl


# ------------------------------------------------------------------ buffering

def buffer_cell(lib):
    """Smallest non-inverting single-input cell, or None."""
    cands = [c for c in lib.cells.values() if len(c.inputs) == 1 and c.truth_table() == 0b10]
    return min(cands, key=lambda c: (c.area, c.name), default=None)


def _plan(sinks, fanout, buf_arc, buf_cap):
    """Group ``sinks`` (cap, tail, payload) under buffers until at most
    ``fanout`` remain; the most critical sinks stay closest to the driver."""
    level = sorted(sinks, key=lambda x: -x[1])
    trees = []
    while len(level) > fanout:
        nb = -(-(len(level) - fanout) // (fanout - 1))
        direct = max(0, fanout - nb)
        keep, rest = level[:direct], level[direct:]
        nxt = list(keep)
        for i in range(0, len(rest), fanout):
            group = rest[i:i + fanout]
            load = sum(g[0] for g in group)
            tail = buf_arc.delay(load) + max(g[1] for g in group)
            node = (buf_cap, tail, ("buf", len(trees)))
            trees.append(group)
            nxt.append(node)
        level = sorted(nxt, key=lambda x: -x[1])
    return level, trees


def buffer_fanout(nl, lib, timing, max_fanout=8):
    """Insert buffer trees on nets with more than ``max_fanout`` library
    readers, where that lowers the estimated worst path through the net.

    Nets are visited from the outputs backwards so each decision sees the
    already-buffered fanout cone.  Without a buffer cell, or under unit
    delays (no load dependence), the netlist is returned unchanged.
    """
    bufc = buffer_cell(lib)
    if bufc is None or timing.unit or max_fanout < 2:
        return nl
    buf_pin = bufc.inputs[0]
    buf_arc = timing.arc(bufc.name, buf_pin)
    buf_cap = bufc.pin(buf_pin).cap
    res = nl.copy()
    readers = res.readers()
    tail, load = {}, {}

    def sink(cname, pin):
        """(cap, tail) seen by a net at one reader pin."""
        if not cname:
            return 0.0, 0.0
        c = res.cells[cname]
        if c.kind == "LIB":
            y = c.pins[c.lib_output].bits()[0]
            cap = lib.cells[c.libcell].pin(pin).cap
            return cap, timing.arc(c.libcell, pin).delay(load.get(y, 0.0)) + tail.get(y, 0.0)
        if c.kind == "BUF":
            y = c.pins["Y"].bits()[0]
            return load.get(y, 0.0), tail.get(y, 0.0)
        return 0.0, 0.0

    for name in reversed(topo_order(nl)):
        c = res.cells[name]
        if c.kind not in ("LIB", "BUF"):
            continue
        y = c.pins[c.lib_output if c.kind == "LIB" else "Y"].bits()[0]
        fixed, movable = [], []
        for cname, pin in readers.get(y, ()):
            cap, t = sink(cname, pin)
            is_lib = cname and res.cells[cname].kind == "LIB"
            (movable if is_lib else fixed).append((cap, t, (cname, pin)))
        fixed_cap = sum(f[0] for f in fixed)
        fixed_tail = max((f[1] for f in fixed), default=0.0)
        if c.kind == "LIB" and len(movable) > max_fanout:
            slope = max(timing.arc(c.libcell, p).slope for p in lib.cells[c.libcell].inputs)
            best = (slope * (fixed_cap + sum(m[0] for m in movable)) + max(m[1] for m in movable),)
            for f in range(2, max_fanout + 1):
                top, trees = _plan(movable, f, buf_arc, buf_cap)
                est = slope * (fixed_cap + sum(t[0] for t in top)) + max(t[1] for t in top)
                if est < best[0]:
                    best = (est, top, trees)
            if len(best) > 1:
                movable = best[1]
                _build_trees(res, y, best[1], best[2], bufc)
        load[y] = fixed_cap + sum(m[0] for m in movable)
        tail[y] = max(fixed_tail, max((m[1] for m in movable), default=0.0))
    return res


def _build_trees(nl, root, top, trees, bufc):
    """Materialise a :func:`_plan` result below the net bit ``root``."""
    def attach(src, node):
        payload = node[2]
        if payload[0] != "buf":
            cname, pin = payload
            c = nl.cells[cname]
            c.pins[pin] = SignalRef.from_bits([src if b == root else b for b in c.pins[pin].bits()])
            return
        net = nl.fresh("_fbn")
        nl.add_net(net)
        cell = nl.fresh("_fbc")
        nl.add_cell("LIB", cell, {bufc.inputs[0]: [src], bufc.output: [(net, 0)]},
                    libcell=bufc.name, lib_output=bufc.output)
        for sub in trees[payload[1]]:
            attach((net, 0), sub)

    for node in top:
        attach(root, node)
