"""Word-level netlist rewrites.

* ``shift2mux``: SHIFTX cells whose select is a constant multiple of a
  block index become balanced block multiplexers; other shifts become a
  zero-fill barrel shifter, so no SHIFTX survives.
* ``constprop``: generic gates with constant inputs are simplified.
* ``dce``: logic with no path to an output or register input is dropped.
* ``infermacc``: ``MUL`` feeding one or two ``ADD`` cells becomes ``MACC``.
"""
from dataclasses import dataclass

from .ir import (GENERIC_GATES, Builder, Cell, SignalRef,
                 kind_inputs, macc_width, output_bits, prune_nets, rewire,
                 topo_order)


@dataclass(frozen=True)
class StrideMatch:
    cell: str
    stride: int
    index: SignalRef
    blocks: int
    offset: int = 0  # constant select value (single-block form)


def _ceil_div(a, b):
    return -(-a // b)


def detect_stride(nl, cell):
    """Recognise ``S`` as constant, ``{index, k'b0}`` or ``MUL(index, c)``."""
    c = nl.cells[cell] if isinstance(cell, str) else cell
    if c.kind != "SHIFTX":
        raise ValueError(f"{c.name} is not a SHIFTX cell")
    wa = c.params["A_WIDTH"]
    s = c.pins["S"]
    bits = s.bits()
    if s.is_const():
        return StrideMatch(c.name, max(c.params["Y_WIDTH"], 1), SignalRef(), 1, s.const_value())
    k = 0
    while k < len(bits) and bits[k] == 0:
        k += 1
    if k >= 1:
        stride = 1 << k
        index = SignalRef.from_bits(bits[k:])
        return StrideMatch(c.name, stride, index, _ceil_div(wa, stride))
    drv = nl.drivers()
    d = drv.get(bits[0])
    if d and d[0]:
        m = nl.cells[d[0]]
        if m.kind == "MUL" and m.pins["Y"].bits() == bits:
            for ip, cp in (("A", "B"), ("B", "A")):
                cref, iref = m.pins[cp], m.pins[ip]
                if cref.is_const() and not iref.is_const():
                    cval = cref.const_value()
                    exact = m.params["Y_WIDTH"] >= iref.width + cval.bit_length()
                    if cval > 0 and exact:
                        return StrideMatch(c.name, cval, iref, _ceil_div(wa, cval))
    return None


def _block_bits(a_bits, stride, i, width):
    out = []
    for j in range(width):
        p = i * stride + j
        out.append(a_bits[p] if p < len(a_bits) else 0)
    return out


def _next_pow2(x):
    return 1 << (x - 1).bit_length()


def pad_stride_pow2(match, nl):
    """Repack ``A`` at the next power-of-two stride and re-select with
    ``{index, zeros}``.  Returns a new netlist (unchanged if the stride is
    already a power of two or the output spans more than one block)."""
    c = nl.cells[match.cell]
    stride = match.stride
    wy = c.params["Y_WIDTH"]
    if match.blocks <= 1 or stride & (stride - 1) == 0 or wy > stride:
        return nl
    sp = _next_pow2(stride)
    k = sp.bit_length() - 1
    a_bits = c.pins["A"].bits()
    packed = []
    for i in range(match.blocks):
        packed += _block_bits(a_bits, stride, i, stride) + [0] * (sp - stride)
    res = nl.copy()
    pad = res.fresh(f"{c.name}_pad")
    if sp > wy:
        res.add_net(pad, sp - wy)
    y_bits = list(c.pins["Y"].bits()) + [(pad, j) for j in range(sp - wy)]
    s_bits = [0] * k + list(match.index.bits())
    res.cells[c.name] = Cell("SHIFTX", c.name, {
        "A_WIDTH": len(packed), "S_WIDTH": len(s_bits), "Y_WIDTH": sp},
        {"A": SignalRef.from_bits(packed), "S": SignalRef.from_bits(s_bits),
         "Y": SignalRef.from_bits(y_bits)})
    return res


def _mux_tree(bld, leaves, sel):
    """Balanced tree, sel[0] innermost; identical siblings pass through."""
    level = 0
    while len(leaves) > 1:
        s = sel[level]
        nxt = []
        for i in range(0, len(leaves), 2):
            a = leaves[i]
            b = leaves[i + 1] if i + 1 < len(leaves) else a
            if a is b or a == b:
                nxt.append(a)
            else:
                nxt.append([bld.mux(x, y, s) for x, y in zip(a, b)])
        leaves = nxt
        level += 1
    return leaves[0]


def blockmux_bits(bld, match, a_bits, wy):
    if match.blocks <= 1 and match.index.width == 0:
        return _block_bits(a_bits, 1, match.offset, wy)
    sel = match.index.bits()
    nb = min(match.blocks, 1 << len(sel))
    if nb <= 1:
        return _block_bits(a_bits, match.stride, 0, wy)
    levels = (nb - 1).bit_length()
    blocks = [tuple(_block_bits(a_bits, match.stride, i, wy)) for i in range(nb)]
    leaves = blocks + [blocks[-1]] * ((1 << levels) - nb)
    return _mux_tree(bld, leaves, sel)


def barrel_bits(bld, a_bits, s_bits, wy):
    wa, ws = len(a_bits), len(s_bits)
    cur = list(a_bits)
    for i in range(ws):
        width = min(wa, wy + (1 << ws) - (1 << (i + 1)))
        step = 1 << i
        cur = [bld.mux(cur[k], cur[k + step] if k + step < len(cur) else 0, s_bits[i])
               for k in range(width)]
    return (cur + [0] * wy)[:wy]


def shift_to_blockmux(nl, fallback=True):
    """Lower every SHIFTX: block mux when a stride is detected, barrel
    shifter otherwise (``fallback=False`` leaves those in place)."""
    res = nl.copy()
    shifts = sorted(n for n, c in nl.cells.items() if c.kind == "SHIFTX")
    for name in shifts:
        c = res.cells[name]
        m = detect_stride(res, c)
        if m is None and not fallback:
            continue
        del res.cells[name]
        bld = Builder(res, f"{name}_m", fold=False)
        a_bits = c.pins["A"].bits()
        wy = c.params["Y_WIDTH"]
        if m is not None:
            out = blockmux_bits(bld, m, a_bits, wy)
        else:
            out = barrel_bits(bld, a_bits, c.pins["S"].bits(), wy)
        bld.drive(out, c.pins["Y"].bits())
    return res


def barrel_lower(nl):
    """Lower every SHIFTX to the barrel shifter (the reference lowering)."""
    res = nl.copy()
    for name in sorted(n for n, c in nl.cells.items() if c.kind == "SHIFTX"):
        c = res.cells.pop(name)
        bld = Builder(res, f"{name}_m", fold=False)
        out = barrel_bits(bld, c.pins["A"].bits(), c.pins["S"].bits(), c.params["Y_WIDTH"])
        bld.drive(out, c.pins["Y"].bits())
    return res


# ---------------------------------------------------------- constant folding

def _simplify(kind, ins):
    """Replacement for a gate with resolved inputs: ``("const", v)``,
    ``("alias", bit)``, ``(kind, inputs)`` or ``None``."""
    if kind == "MUX":
        a, b, s = ins
        if isinstance(s, int):
            return ("alias", b if s else a)
        if a == b:
            return ("alias", a)
        if a == 0 and b == 1:
            return ("alias", s)
        if a == 1 and b == 0:
            return ("NOT", (s,))
        if a == 0:
            return ("AND", (s, b))
        if b == 1:
            return ("OR", (a, s))
        return None
    consts = [x for x in ins if isinstance(x, int)]
    if not consts:
        return None
    if kind in ("BUF", "NOT"):
        return ("const", consts[0] ^ (kind == "NOT"))
    if len(consts) == 2:
        a, b = ins
        v = {"AND": a & b, "OR": a | b, "XOR": a ^ b, "NAND": 1 - (a & b),
             "NOR": 1 - (a | b), "XNOR": 1 - (a ^ b)}[kind]
        return ("const", v)
    k = consts[0]
    x = ins[0] if not isinstance(ins[0], int) else ins[1]
    base = {"NAND": "AND", "NOR": "OR", "XNOR": "XOR"}.get(kind, kind)
    inv = kind in ("NAND", "NOR", "XNOR")
    if base == "AND":
        r = ("const", 0) if k == 0 else ("alias", x)
    elif base == "OR":
        r = ("const", 1) if k == 1 else ("alias", x)
    else:
        r = ("alias", x) if k == 0 else ("NOT", (x,))
    if not inv:
        return r
    if r[0] == "const":
        return ("const", 1 - r[1])
    if r[0] == "alias":
        return ("NOT", (r[1],))
    return ("alias", x)


def const_propagate(nl):
    """Fold constant inputs through generic gates and MUX until nothing
    changes.  ``XOR(a, a)`` and similar identities are left alone."""
    order = topo_order(nl)
    port_bits = set(output_bits(nl))
    mapping = {}
    removed = []
    res = nl.copy()

    def resolve(b):
        while not isinstance(b, int) and b in mapping:
            b = mapping[b]
        return b

    for name in order:
        c = res.cells[name]
        if c.kind not in GENERIC_GATES:
            continue
        pins = kind_inputs(c)
        ins = tuple(resolve(c.pins[p].bits()[0]) for p in pins)
        y = c.pins["Y"].bits()[0]
        if c.kind == "BUF" and y in port_bits:
            if ins[0] != c.pins["A"].bits()[0]:
                res.cells[name] = Cell("BUF", name, {}, {"A": SignalRef.from_bits(ins), "Y": c.pins["Y"]})
            continue
        r = _simplify(c.kind, ins)
        if r is None:
            continue
        if r[0] in ("const", "alias"):
            mapping[y] = r[1]
            removed.append(name)
        else:
            kind, new_ins = r
            pins = {p: SignalRef.from_bits([b]) for p, b in zip(GENERIC_GATES[kind], new_ins)}
            pins["Y"] = c.pins["Y"]
            res.cells[name] = Cell(kind, name, {}, pins)
    out = rewire(res, mapping, removed)
    return prune_nets(out)


def dead_cell_elim(nl):
    """Drop cells with no path to an output port or register input."""
    drv = nl.drivers()
    live = set()
    stack = list(output_bits(nl))
    for c in nl.cells.values():
        if c.kind == "DFF":
            live.add(c.name)
            for p in ("D", "CLK"):
                stack += [b for b in c.pins[p].bits() if not isinstance(b, int)]
    seen = set()
    while stack:
        b = stack.pop()
        if b in seen:
            continue
        seen.add(b)
        d = drv.get(b)
        if not d or not d[0]:
            continue
        cname = d[0]
        if cname in live:
            continue
        live.add(cname)
        c = nl.cells[cname]
        for p in kind_inputs(c):
            stack += [x for x in c.pins[p].bits() if not isinstance(x, int)]
    if len(live) == len(nl.cells):
        return prune_nets(nl.copy())
    res = nl.copy()
    res.cells = {k: v for k, v in res.cells.items() if k in live}
    return prune_nets(res)


# ------------------------------------------------------------- MACC fusion

def _exact(cell):
    p = cell.params
    if cell.kind == "MUL":
        return p["Y_WIDTH"] >= p["A_WIDTH"] + p["B_WIDTH"]
    return p["Y_WIDTH"] >= max(p["A_WIDTH"], p["B_WIDTH"]) + 1


def _sole_reader(nl, readers, cell):
    """The one cell reading every output bit of ``cell`` (whole-word), or None."""
    bits = cell.pins["Y"].bits()
    names = set()
    for b in bits:
        rs = readers.get(b, [])
        if len(rs) != 1 or not rs[0][0]:
            return None
        names.add(rs[0])
    if len(names) != 1:
        return None
    name, pin = names.pop()
    reader = nl.cells[name]
    if reader.kind != "ADD" or reader.pins[pin].bits() != bits:
        return None
    return reader, pin


def infer_macc(nl):
    """Fuse ``ADD(ADD(MUL(a, b), c), d)`` and ``ADD(MUL(a, b), c)`` into MACC."""
    res = nl.copy()
    readers = nl.readers()
    for mname in sorted(n for n, c in nl.cells.items() if c.kind == "MUL"):
        mul = res.cells.get(mname)
        if mul is None or not _exact(mul):
            continue
        hit = _sole_reader(res, readers, mul)
        if hit is None:
            continue
        add1, pin1 = hit
        c_ref = add1.pins["B" if pin1 == "A" else "A"]
        outer, d_ref = add1, SignalRef.const(0, 1)
        if _exact(add1):
            hit2 = _sole_reader(res, readers, add1)
            if hit2 is not None:
                add2, pin2 = hit2
                outer = add2
                d_ref = add2.pins["B" if pin2 == "A" else "A"]
        wa, wb = mul.params["A_WIDTH"], mul.params["B_WIDTH"]
        wy = macc_width(wa, wb, c_ref.width, d_ref.width)
        y_bits = outer.pins["Y"].bits()
        name = outer.name
        for dead in {mul.name, add1.name, outer.name}:
            del res.cells[dead]
        if len(y_bits) >= wy:
            macc_y = y_bits[:wy]
            for j, b in enumerate(y_bits[wy:]):
                res.add_cell("BUF", res.fresh(f"{name}_z"), {"A": [0], "Y": [b]})
        else:
            spill = res.fresh(f"{name}_hi")
            res.add_net(spill, wy - len(y_bits))
            macc_y = y_bits + [(spill, j) for j in range(wy - len(y_bits))]
        res.add_cell("MACC", name, {
            "A": mul.pins["A"], "B": mul.pins["B"], "C": c_ref, "D": d_ref,
            "Y": SignalRef.from_bits(macc_y)}, {
            "A_WIDTH": wa, "B_WIDTH": wb, "C_WIDTH": c_ref.width,
            "D_WIDTH": d_ref.width, "Y_WIDTH": wy})
    return prune_nets(res)


PASSES = {
    "shift2mux": shift_to_blockmux,
    "constprop": const_propagate,
    "dce": dead_cell_elim,
    "infermacc": infer_macc,
}
