"""Simulation and combinational equivalence checking.

The simulator compiles a netlist once into a flat gate program over packed
64-bit words (64 vectors per word).  Word-level cells are expanded into a
plain reference structure (ripple adders, shift-and-add multiply, zero-fill
barrel shifter) whose semantics are the unsigned integer ones; mapped cells
are expanded from their library function.

Registers are cut points: ``inst.Q`` is a pseudo input, ``inst.D`` and
``inst.CLK`` are pseudo outputs.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import SignatureMismatch, SynkitError, UnmappedCell
from .ir import (GENERIC_GATES, Builder, Netlist, SignalRef, kind_inputs,
                 topo_order)

_OPS = {"BUF": K.OP_BUF, "NOT": K.OP_NOT, "AND": K.OP_AND, "OR": K.OP_OR,
        "XOR": K.OP_XOR, "NAND": K.OP_NAND, "NOR": K.OP_NOR, "XNOR": K.OP_XNOR,
        "MUX": K.OP_MUX}

CHUNK_CELLS = 1 << 22  # rows x words per simulation chunk


def io_signature(nl):
    """(pseudo) input and output names with widths, in simulation order."""
    dffs = sorted(n for n, c in nl.cells.items() if c.kind == "DFF")
    ins = [(p.name, p.width) for p in nl.inputs()] + [(f"{d}.Q", 1) for d in dffs]
    outs = [(p.name, p.width) for p in nl.outputs()]
    for d in dffs:
        outs += [(f"{d}.D", 1), (f"{d}.CLK", 1)]
    return ins, outs


class _Prog:
    """Gate program over row indices with light constant folding."""

    def __init__(self):
        self.nrows = 2
        self.gates = []

    def new(self):
        self.nrows += 1
        return self.nrows - 1

    def gate(self, op, a, b=0, c=0, out=None):
        if out is None:
            out = self.new()
        self.gates.append((op, a, b, c, out))
        return out

    def not_(self, a):
        if a < 2:
            return 1 - a
        return self.gate(K.OP_NOT, a)

    def and_(self, a, b):
        if a == 0 or b == 0:
            return 0
        if a == 1:
            return b
        if b == 1:
            return a
        return self.gate(K.OP_AND, a, b)

    def or_(self, a, b):
        if a == 1 or b == 1:
            return 1
        if a == 0:
            return b
        if b == 0:
            return a
        return self.gate(K.OP_OR, a, b)

    def xor(self, a, b):
        if a == 0:
            return b
        if b == 0:
            return a
        if a == 1:
            return self.not_(b)
        if b == 1:
            return self.not_(a)
        return self.gate(K.OP_XOR, a, b)

    def mux(self, a, b, s):
        if s < 2:
            return b if s else a
        if a == b:
            return a
        return self.gate(K.OP_MUX, a, b, s)

    def add(self, x, y, cin, width):
        x = (list(x) + [0] * width)[:width]
        y = (list(y) + [0] * width)[:width]
        out, c = [], cin
        for a, b in zip(x, y):
            p = self.xor(a, b)
            out.append(self.xor(p, c))
            c = self.or_(self.and_(a, b), self.and_(c, p))
        return out

    def mul(self, a, b, width):
        acc = [0] * width
        for j, bj in enumerate(b):
            if j >= width:
                break
            row = [0] * j + [self.and_(ai, bj) for ai in a]
            acc = self.add(acc, row, 0, width)
        return acc

    def shiftx(self, a, s, wy):
        cur = list(a)
        for i, si in enumerate(s):
            step = 1 << i
            if step >= len(cur):
                # any set high select bit shifts everything out
                ns = self.not_(si)
                cur = [self.and_(x, ns) for x in cur]
                continue
            cur = [self.mux(cur[k], cur[k + step] if k + step < len(cur) else 0, si)
                   for k in range(len(cur))]
        return cur[:wy]

    def expr(self, e, env):
        op = e[0]
        if op == "var":
            return env[e[1]]
        if op == "not":
            return self.not_(self.expr(e[1], env))
        a, b = self.expr(e[1], env), self.expr(e[2], env)
        return {"and": self.and_, "or": self.or_, "xor": self.xor}[op](a, b)


class Simulator:
    """Compiled bit-parallel simulator for one netlist."""

    def __init__(self, nl, lib=None):
        self.netlist = nl
        self.inputs, self.outputs = io_signature(nl)
        prog = _Prog()
        row = {}
        for p in nl.inputs():
            for i in range(p.width):
                row[(p.name, i)] = prog.new()
        dffs = sorted(n for n, c in nl.cells.items() if c.kind == "DFF")
        for d in dffs:
            row[nl.cells[d].pins["Q"].bits()[0]] = prog.new()
        self.n_pi = prog.nrows - 2

        def rows(ref):
            return [b if isinstance(b, int) else row[b] for b in ref.bits()]

        def bind(ref, vals):
            for b, v in zip(ref.bits(), vals):
                row[b] = v

        for name in topo_order(nl):
            c = nl.cells[name]
            k = c.kind
            if k == "DFF":
                continue
            if k in GENERIC_GATES:
                ins = [rows(c.pins[p])[0] for p in GENERIC_GATES[k]] + [0, 0]
                out = prog.gate(_OPS[k], ins[0], ins[1], ins[2])
                bind(c.pins["Y"], [out])
            elif k == "LIB":
                if lib is None or c.libcell not in lib.cells:
                    raise UnmappedCell(c.name, c.type_name)
                d = lib.cells[c.libcell]
                env = {p: rows(c.pins[p])[0] for p in d.inputs}
                bind(c.pins[c.lib_output], [prog.expr(d.function, env)])
            else:
                wy = c.params["Y_WIDTH"]
                a = rows(c.pins["A"])
                if k == "SHIFTX":
                    y = prog.shiftx(a, rows(c.pins["S"]), wy)
                elif k == "ADD":
                    y = prog.add(a, rows(c.pins["B"]), 0, wy)
                elif k == "SUB":
                    nb = [prog.not_(x) for x in (rows(c.pins["B"]) + [0] * wy)[:wy]]
                    y = prog.add(a, nb, 1, wy)
                elif k == "MUL":
                    y = prog.mul(a, rows(c.pins["B"]), wy)
                elif k == "MACC":
                    y = prog.mul(a, rows(c.pins["B"]), wy)
                    y = prog.add(y, rows(c.pins["C"]), 0, wy)
                    y = prog.add(y, rows(c.pins["D"]), 0, wy)
                else:
                    raise UnmappedCell(c.name, k)
                bind(c.pins["Y"], y)
        out_rows = []
        for p in nl.outputs():
            out_rows += [row[(p.name, i)] if (p.name, i) in row else 0 for i in range(p.width)]
        for d in dffs:
            cell = nl.cells[d]
            out_rows += [rows(cell.pins["D"])[0], rows(cell.pins["CLK"])[0]]
        self.nrows = prog.nrows
        g = np.array(prog.gates, dtype=np.int64).reshape(-1, 5)
        self._ops = g[:, 0].astype(np.uint8).copy()
        self._ia, self._ib, self._ic, self._out = (g[:, i].copy() for i in range(1, 5))
        self._po = np.array(out_rows, dtype=np.int64)

    @property
    def n_gates(self):
        return len(self._ops)

    def run(self, pi_words):
        """``pi_words``: ``(n_pi, nwords)`` uint64 -> ``(n_po, nwords)`` uint64."""
        pi_words = np.asarray(pi_words, dtype=np.uint64)
        nwords = pi_words.shape[1] if pi_words.ndim == 2 else 0
        res = np.empty((len(self._po), nwords), dtype=np.uint64)
        step = max(1, min(nwords, CHUNK_CELLS // max(self.nrows, 1)))
        for w0 in range(0, nwords, step):
            w1 = min(nwords, w0 + step)
            vals = np.zeros((self.nrows, w1 - w0), dtype=np.uint64)
            vals[1] = K.ALL_ONES
            vals[2:2 + self.n_pi] = pi_words[:, w0:w1]
            K.run_gates(self._ops, self._ia, self._ib, self._ic, self._out, vals)
            res[:, w0:w1] = vals[self._po]
        return res

    # -- scalar helpers
    def pack(self, vector):
        bits = []
        for name, w in self.inputs:
            v = vector[name]
            bits += [(v >> i) & 1 for i in range(w)]
        return np.array(bits, dtype=np.uint64).reshape(-1, 1)

    def unpack(self, po_col):
        out, k = {}, 0
        for name, w in self.outputs:
            out[name] = sum(int(po_col[k + i]) << i for i in range(w))
            k += w
        return out


def simulate(nl, vector, lib=None):
    """Output assignment (dict name -> int) for one input assignment.

    ``vector`` maps every input port (and ``inst.Q`` for registers) to an
    unsigned integer.
    """
    sim = Simulator(nl, lib)
    res = sim.run(sim.pack(vector))
    return sim.unpack(res[:, 0] & np.uint64(1))


# ------------------------------------------------------------------ verdicts

@dataclass(frozen=True)
class Exhaustive:
    max_bits: int = 16


@dataclass(frozen=True)
class Random:
    n: int = 100000
    seed: int = 42


@dataclass(frozen=True)
class Equivalent:
    mode: object
    vectors: int


@dataclass(frozen=True)
class CounterExample:
    vector: dict
    output_bit: tuple  # (output name, bit index)


@dataclass(frozen=True)
class Inconclusive:
    budget: int


def default_mode(nl, max_bits=16, n=100000, seed=42):
    bits = sum(w for _, w in io_signature(nl)[0])
    return Exhaustive(max_bits) if bits <= max_bits else Random(n, seed)


def check_signatures(a, b):
    sa, sb = io_signature(a), io_signature(b)
    if sorted(sa[0]) != sorted(sb[0]) or sorted(sa[1]) != sorted(sb[1]):
        raise SignatureMismatch(f"interfaces differ: {sa} vs {sb}")


def _exhaustive_words(n_pi, w0, w1):
    """Rows of PI bit patterns for vectors ``64*w0 .. 64*w1 - 1``."""
    v = np.arange(64 * w0, 64 * w1, dtype=np.uint64).reshape(-1, 64)
    shifts = np.arange(64, dtype=np.uint64)
    out = np.empty((n_pi, w1 - w0), dtype=np.uint64)
    for j in range(n_pi):
        bits = (v >> np.uint64(j)) & np.uint64(1)
        out[j] = np.bitwise_or.reduce(bits << shifts, axis=1)
    return out


def _bits_of(words, count):
    return np.unpackbits(np.ascontiguousarray(words).view(np.uint8), bitorder="little")[:count].astype(bool)


class _Checker:
    def __init__(self, a, b, constraint, lib):
        check_signatures(a, b)
        self.sa = Simulator(a, lib)
        self.sb = Simulator(b, lib)
        self.ins = self.sa.inputs
        # b may list ports in a different order
        perm_in = _reorder(self.sb.inputs, self.ins)
        self.b_in = perm_in
        self.b_out = _reorder(self.sb.outputs, self.sa.outputs, inverse=True)
        self.sc = None
        if constraint is not None:
            self.sc = Simulator(constraint, lib)
            pos = {}
            k = 0
            for name, w in self.ins:
                pos[name] = (k, w)
                k += w
            idx = []
            for name, w in self.sc.inputs:
                if name not in pos or pos[name][1] != w:
                    raise SignatureMismatch(f"constraint input {name}[{w}] not in design")
                idx += list(range(pos[name][0], pos[name][0] + w))
            self.c_in = np.array(idx, dtype=np.int64)
            if sum(w for _, w in self.sc.outputs) != 1:
                raise SignatureMismatch("constraint must have a single 1-bit output")

    def evaluate(self, pi):
        """(legal words, diff rows) for a block of PI words."""
        ya = self.sa.run(pi)
        yb = self.sb.run(pi[self.b_in])[self.b_out]
        diff = ya ^ yb
        if self.sc is not None:
            legal = self.sc.run(pi[self.c_in])[0]
        else:
            legal = np.full(pi.shape[1], K.ALL_ONES, dtype=np.uint64)
        return legal, diff


def _reorder(src, dst, inverse=False):
    """Bit-row permutation taking ``src`` ordering to ``dst`` ordering."""
    start, k = {}, 0
    for name, w in src:
        start[name] = k
        k += w
    idx = []
    for name, w in dst:
        idx += list(range(start[name], start[name] + w))
    idx = np.array(idx, dtype=np.int64)
    if inverse:
        return idx
    return np.argsort(idx)


def check_equiv(a, b, mode=None, constraint=None, lib=None):
    """Compare two netlists with the same interface by simulation.

    Returns :class:`Equivalent`, :class:`CounterExample` (first failing
    vector in enumeration order) or :class:`Inconclusive`.
    """
    mode = mode or default_mode(a)
    chk = _Checker(a, b, constraint, lib)
    n_pi = sum(w for _, w in chk.ins)
    if isinstance(mode, Exhaustive):
        if n_pi > mode.max_bits:
            return Inconclusive(mode.max_bits)
        total = 1 << n_pi
        nwords = (total + 63) // 64
        step = max(1, min(nwords, 256))
        legal_count = 0
        for w0 in range(0, nwords, step):
            w1 = min(nwords, w0 + step)
            pi = _exhaustive_words(n_pi, w0, w1)
            legal, diff = chk.evaluate(pi)
            count = min(total - 64 * w0, 64 * (w1 - w0))
            ok = _bits_of(legal, count)
            legal_count += int(ok.sum())
            bad = _first_diff(diff, ok, count)
            if bad is not None:
                vec, row = bad
                return _counterexample(chk, pi, vec, row, a, b, lib)
        return Equivalent(mode, legal_count)

    rng = np.random.default_rng(mode.seed)
    need = mode.n
    drawn = 0
    cap = 10 * mode.n
    seen = 0
    while need > 0:
        if drawn >= cap:
            return Inconclusive(cap)
        batch = min(cap - drawn, max(need, 4096) if chk.sc is not None else need)
        nwords = (batch + 63) // 64
        pi = rng.integers(0, 1 << 64, size=(n_pi, nwords), dtype=np.uint64, endpoint=False)
        legal, diff = chk.evaluate(pi)
        ok = _bits_of(legal, batch)
        # keep only the first ``need`` legal draws
        csum = np.cumsum(ok)
        ok &= csum <= need
        got = int(ok.sum())
        bad = _first_diff(diff, ok, batch)
        if bad is not None:
            vec, row = bad
            return _counterexample(chk, pi, vec, row, a, b, lib)
        need -= got
        seen += got
        drawn += batch
    return Equivalent(mode, seen)


def _first_diff(diff, ok, count):
    if diff.shape[0] == 0:
        return None
    anyd = np.bitwise_or.reduce(diff, axis=0)
    bits = _bits_of(anyd, count) & ok
    if not bits.any():
        return None
    vec = int(np.argmax(bits))
    w, k = divmod(vec, 64)
    col = (diff[:, w] >> np.uint64(k)) & np.uint64(1)
    return vec, int(np.argmax(col))


def _counterexample(chk, pi, vec, row, a, b, lib):
    w, k = divmod(vec, 64)
    bits = ((pi[:, w] >> np.uint64(k)) & np.uint64(1)).astype(int).tolist()
    vector, pos = {}, 0
    for name, width in chk.ins:
        vector[name] = sum(bits[pos + i] << i for i in range(width))
        pos += width
    pos = 0
    out_bit = None
    for name, width in chk.sa.outputs:
        if row < pos + width:
            out_bit = (name, row - pos)
            break
        pos += width
    ra = simulate(a, vector, lib)
    rb = simulate(b, vector, lib)
    name, i = out_bit
    if ((ra[name] >> i) & 1) == ((rb[name] >> i) & 1):
        raise SynkitError(f"counterexample on {name}[{i}] does not re-simulate")
    return CounterExample(vector, out_bit)


# -------------------------------------------------------------------- miter

def _copy_into(dst, src, prefix, bitmap):
    """Copy ``src`` cells into ``dst`` renaming internal nets; DFFs dropped."""

    def m(b):
        if isinstance(b, int):
            return b
        return bitmap.get(b, (prefix + b[0], b[1]))

    for name, n in src.nets.items():
        if prefix + name not in dst.nets:
            dst.add_net(prefix + name, n.width)
    for c in src.cells.values():
        if c.kind == "DFF":
            continue
        pins = {p: SignalRef.from_bits([m(b) for b in ref.bits()]) for p, ref in c.pins.items()}
        dst.add_cell(c.kind, prefix + c.name, pins, c.params, c.libcell, c.lib_output)
    return m


def _pi_bitmap(nl, qport):
    bm = {}
    for p in nl.inputs():
        for i in range(p.width):
            bm[(p.name, i)] = (p.name, i)
    for d, c in nl.cells.items():
        if c.kind == "DFF":
            bm[c.pins["Q"].bits()[0]] = (qport[d], 0)
    return bm


def _po_bits(nl, m):
    out = []
    for p in nl.outputs():
        out += [(p.name, i) for i in range(p.width)]
    res = [m(b) for b in out]
    for d in sorted(n for n, c in nl.cells.items() if c.kind == "DFF"):
        c = nl.cells[d]
        res += [m(c.pins["D"].bits()[0]), m(c.pins["CLK"].bits()[0])]
    return res


def build_miter(a, b, constraint=None):
    """Single-output netlist ``DIFF``: 1 iff some output differs (and the
    constraint, when given, holds)."""
    check_signatures(a, b)
    mit = Netlist("miter")
    for p in a.inputs():
        mit.add_port(p.name, "in", p.width)
    qport = {}
    for d in sorted(n for n, c in a.cells.items() if c.kind == "DFF"):
        qport[d] = f"{d}__Q"
        mit.add_port(qport[d], "in", 1)
    ma = _copy_into(mit, a, "a__", _pi_bitmap(a, qport))
    mb = _copy_into(mit, b, "b__", _pi_bitmap(b, qport))
    pa = _po_bits(a, ma)
    # align b's outputs to a's order
    sig_a, sig_b = io_signature(a)[1], io_signature(b)[1]
    bits_b = _po_bits(b, mb)
    idx = _reorder(sig_b, sig_a, inverse=True)
    pb = [bits_b[i] for i in idx]
    bld = Builder(mit, "m__", fold=True)
    acc = 0
    for x, y in zip(pa, pb):
        acc = bld.or_(acc, bld.xor(x, y))
    if constraint is not None:
        mc = _copy_into(mit, constraint, "c__", {(p.name, i): (p.name, i)
                                                 for p in constraint.inputs()
                                                 for i in range(p.width)})
        legal = mc((constraint.outputs()[0].name, 0))
        acc = bld.and_(acc, legal)
    name = "DIFF"
    while name in mit.nets:
        name = "_" + name
    mit.add_port(name, "out", 1)
    mit.add_cell("BUF", mit.fresh("m__out"), {"A": [acc], "Y": [(name, 0)]})
    return mit


def write_cnf(miter):
    """DIMACS CNF (Tseitin) asserting the miter output is 1.

    Satisfiable iff the two designs differ on some legal vector.  Only
    generic gates are supported; lower word cells first.
    """
    var = {}

    def v(b):
        if b not in var:
            var[b] = len(var) + 1
        return var[b]

    clauses = []
    f = v("__const0")
    clauses.append([-f])

    def lit(b):
        if isinstance(b, int):
            return f if b == 0 else -f
        return v(b)

    for name in topo_order(miter):
        c = miter.cells[name]
        if c.kind not in GENERIC_GATES:
            raise UnmappedCell(c.name, c.type_name)
        ins = [lit(c.pins[p].bits()[0]) for p in kind_inputs(c)]
        y = v(c.pins["Y"].bits()[0])
        k = c.kind
        if k in ("NAND", "NOR", "XNOR", "NOT"):
            y_pos, k = -y, {"NAND": "AND", "NOR": "OR", "XNOR": "XOR", "NOT": "BUF"}[k]
        else:
            y_pos = y
        if k == "BUF":
            a, = ins
            clauses += [[-y_pos, a], [y_pos, -a]]
        elif k == "AND":
            a, b = ins
            clauses += [[-y_pos, a], [-y_pos, b], [y_pos, -a, -b]]
        elif k == "OR":
            a, b = ins
            clauses += [[y_pos, -a], [y_pos, -b], [-y_pos, a, b]]
        elif k == "XOR":
            a, b = ins
            clauses += [[-y_pos, a, b], [-y_pos, -a, -b], [y_pos, -a, b], [y_pos, a, -b]]
        else:  # MUX: y = s ? b : a
            a, b, s = ins
            clauses += [[s, -a, y_pos], [s, a, -y_pos], [-s, -b, y_pos], [-s, b, -y_pos]]
    out = miter.outputs()[0]
    clauses.append([lit((out.name, 0))])
    lines = [f"p cnf {len(var)} {len(clauses)}"]
    lines += [" ".join(map(str, cl)) + " 0" for cl in clauses]
    return "\n".join(lines) + "\n"


def lt_const(name, width, bound, port=None):
    """Constraint netlist: input ``port`` (default ``name``) is below ``bound``."""
    port = port or name
    nl = Netlist(f"{name}_lt_{bound}")
    nl.add_port(port, "in", width)
    nl.add_port("legal", "out", 1)
    bld = Builder(nl, "c", fold=True)
    if bound >= 1 << width:
        res = 1
    else:
        lt, eq = 0, 1
        for i in reversed(range(width)):
            x = (port, i)
            if (bound >> i) & 1:
                lt = bld.or_(lt, bld.and_(eq, bld.not_(x)))
                eq = bld.and_(eq, x)
            else:
                eq = bld.and_(eq, bld.not_(x))
        res = lt
    nl.add_cell("BUF", "c_out", {"A": [res], "Y": [("legal", 0)]})
    return nl
