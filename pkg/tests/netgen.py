"""Random fixture builders for property tests."""
import random

from synkit.ir import Netlist, SignalRef
from synkit.liberty import CellLibrary, DelayTable, LibCellDef, LibPin, parse_expr
from synkit.techmap import Arc, CompiledTiming

GATES2 = ("AND", "OR", "XOR", "NAND", "NOR", "XNOR")


def random_netlist(seed, n_in=(1, 3), width=(1, 4), n_gates=(1, 30), words=False, dffs=False,
                   consts=True):
    """A valid single-module netlist of generic gates (and optionally word
    cells and registers)."""
    rng = random.Random(seed)
    nl = Netlist(f"r{seed}")
    pool = []
    for k in range(rng.randint(*n_in)):
        w = rng.randint(*width)
        nl.add_port(f"i{k}", "in", w)
        pool += [(f"i{k}", j) for j in range(w)]
    if dffs and rng.random() < 0.5:
        for k in range(rng.randint(1, 2)):
            nl.add_net(f"q{k}")
            pool.append((f"q{k}", 0))
    regs = [n for n in nl.nets if n.startswith("q")]

    def pick():
        if consts and rng.random() < 0.08:
            return rng.randint(0, 1)
        return rng.choice(pool)

    def pick_word(w):
        return [pick() for _ in range(w)]

    for g in range(rng.randint(*n_gates)):
        y = f"n{g}"
        r = rng.random()
        if words and r < 0.15:
            kind = rng.choice(("ADD", "SUB", "MUL", "SHIFTX"))
            wa, wb = rng.randint(1, 4), rng.randint(1, 3)
            if kind == "SHIFTX":
                wy = rng.randint(1, wa)
                params = {"A_WIDTH": wa, "S_WIDTH": wb, "Y_WIDTH": wy}
                pins = {"A": pick_word(wa), "S": pick_word(wb)}
            else:
                wy = rng.randint(1, wa + wb)
                params = {"A_WIDTH": wa, "B_WIDTH": wb, "Y_WIDTH": wy}
                pins = {"A": pick_word(wa), "B": pick_word(wb)}
            nl.add_net(y, wy)
            pins["Y"] = [(y, j) for j in range(wy)]
            nl.add_cell(kind, f"c{g}", pins, params)
            pool += [(y, j) for j in range(wy)]
            continue
        nl.add_net(y)
        if r < 0.25:
            nl.add_cell(rng.choice(("NOT", "BUF")), f"c{g}", {"A": [pick()], "Y": [(y, 0)]})
        elif r < 0.4:
            nl.add_cell("MUX", f"c{g}", {"A": [pick()], "B": [pick()], "S": [pick()], "Y": [(y, 0)]})
        else:
            nl.add_cell(rng.choice(GATES2), f"c{g}", {"A": [pick()], "B": [pick()], "Y": [(y, 0)]})
        pool.append((y, 0))
    for k, q in enumerate(regs):
        nl.add_cell("DFF", f"r{k}", {"D": [pick()], "CLK": [pick()], "Q": [(q, 0)]})
    for k in range(rng.randint(1, 2)):
        w = rng.randint(1, 4)
        nl.add_port(f"o{k}", "out", w)
        for j in range(w):
            nl.add_cell("BUF", f"ob{k}_{j}", {"A": [pick()], "Y": [(f"o{k}", j)]})
    return nl


def random_library(seed, n_cells=(1, 5)):
    """A random valid cell library with dyadic numbers (exact round trips)."""
    rng = random.Random(seed)
    lib = CellLibrary(f"lib{seed}")
    ops = ("&", "|", "^")
    for c in range(rng.randint(*n_cells)):
        k = rng.randint(1, 3)
        ins = [f"I{j}" for j in range(k)]
        expr = ins[0]
        for j in range(1, k):
            expr = f"({expr} {rng.choice(ops)} {'!' if rng.random() < .3 else ''}{ins[j]})"
        if rng.random() < 0.4:
            expr = f"!{expr}" if expr[0] == "(" else f"!({expr})"
        cell = LibCellDef(f"C{c}", rng.randint(1, 16) / 4)
        for p in ins:
            cell.pins.append(LibPin(p, "in", rng.randint(0, 32) / 8))
        cell.pins.append(LibPin("Z", "out", 0.0))
        cell.function = parse_expr(expr)
        ns, nld = rng.randint(1, 3), rng.randint(1, 3)
        slew = tuple(sorted(rng.sample(range(1, 100), ns)))
        load = tuple(sorted(rng.sample(range(1, 64), nld)))
        for p in ins:
            rows = tuple(tuple(rng.randint(0, 400) / 4 for _ in load) for _ in slew)
            cell.arcs[p] = DelayTable(tuple(map(float, slew)), tuple(map(float, load)), rows)
        lib.cells[cell.name] = cell
    return lib


def dyadic_timing(lib, seed):
    """Random arcs with dyadic values, so every sum is exact."""
    rng = random.Random(seed)
    arcs = {}
    for c in lib.cells.values():
        for p in c.inputs:
            arcs[(c.name, p)] = Arc(rng.randint(1, 400) / 4, rng.randint(0, 32) / 8)
    return CompiledTiming(arcs)


def random_mapped(seed, lib, n_cells=(1, 200), n_in=(1, 4)):
    """Random DAG of library cells (with occasional BUF wires and registers)."""
    rng = random.Random(seed)
    nl = Netlist(f"m{seed}")
    pool = []
    for k in range(rng.randint(*n_in)):
        nl.add_port(f"i{k}", "in", 1)
        pool.append((f"i{k}", 0))
    if rng.random() < 0.3:
        nl.add_net("q")
        pool.append(("q", 0))
    cells = list(lib.cells.values())
    n = rng.randint(*n_cells)
    for g in range(n):
        y = f"n{g}"
        nl.add_net(y)
        if rng.random() < 0.05:
            nl.add_cell("BUF", f"w{g}", {"A": [rng.choice(pool)], "Y": [(y, 0)]})
        else:
            d = rng.choice(cells)
            pins = {p: [rng.choice(pool)] for p in d.inputs}
            pins[d.output] = [(y, 0)]
            nl.add_cell("LIB", f"g{g}", pins, libcell=d.name, lib_output=d.output)
        pool.append((y, 0))
    if ("q", 0) in pool:
        nl.add_cell("DFF", "reg", {"D": [rng.choice(pool)], "CLK": [pool[0]], "Q": [("q", 0)]})
    k = rng.randint(1, 3)
    nl.add_port("o", "out", k)
    for j in range(k):
        nl.add_cell("BUF", f"ob{j}", {"A": [pool[-1 - j] if j < len(pool) else 0], "Y": [("o", j)]})
    return nl


def const_ref(value, width):
    return SignalRef.const(value, width)
