"""Static timing and area reports for mapped netlists.

Generic ``BUF`` cells (port aliases and constant ties left by the mapper)
are treated as wires: no delay, and the loads they drive are charged to the
net feeding them.  Registers cut paths: a ``Q`` pin starts a path at time 0
and a ``D`` pin ends one.  Wire load is zero.
"""
from dataclasses import dataclass, field

from .errors import MissingNand2, UsageError
from .ir import output_bits, topo_order


@dataclass
class TimingReport:
    arrival: float
    levels: int
    path: list  # pins from startpoint to endpoint, "cell/pin" or "port[i]"
    endpoint: str
    endpoints: dict = field(default_factory=dict)  # endpoint -> arrival
    slack: dict = None  # endpoint -> slack, when a delay target is given

    def worst_slack(self):
        return None if self.slack is None else min(self.slack.values(), default=None)


@dataclass
class AreaReport:
    total_ge: float
    breakdown: dict  # lib cell -> GE
    nand2_area: float


def _bitname(b):
    return f"{b[0]}[{b[1]}]"


def _loads(nl, lib):
    """bit -> summed input capacitance of the library pins it reaches."""
    readers = nl.readers()
    memo = {}

    def load(b):
        if b in memo:
            return memo[b]
        total = 0.0
        for cname, pin in readers.get(b, ()):
            if not cname:
                continue
            c = nl.cells[cname]
            if c.kind == "LIB":
                total += lib.cells[c.libcell].pin(pin).cap
            elif c.kind == "BUF":
                total += load(c.pins["Y"].bits()[0])
        memo[b] = total
        return total
    return load


def _check_cells(nl):
    for c in nl.cells.values():
        if c.kind not in ("LIB", "BUF", "DFF"):
            raise UsageError(f"cell {c.name} of kind {c.kind} is not mapped")


def _endpoints(nl):
    eps = [(_bitname(b), b) for b in output_bits(nl)]
    for name in sorted(n for n, c in nl.cells.items() if c.kind == "DFF"):
        eps.append((f"{name}/D", nl.cells[name].pins["D"].bits()[0]))
    return eps


def sta(mapped, lib, timing, delay_target=None):
    """Critical path of ``mapped`` under the linearised delays of ``timing``."""
    _check_cells(mapped)
    load = _loads(mapped, lib)
    arr = {}
    pred = {}  # bit -> (cell, input pin, source bit)
    for name in topo_order(mapped):
        c = mapped.cells[name]
        if c.kind == "DFF":
            q = c.pins["Q"].bits()[0]
            arr[q] = 0.0
            pred[q] = (name, "Q", None)
            continue
        if c.kind == "BUF":
            src = c.pins["A"].bits()[0]
            y = c.pins["Y"].bits()[0]
            arr[y] = arr.get(src, 0.0) if not isinstance(src, int) else 0.0
            pred[y] = (None, None, src)
            continue
        d = lib.cells[c.libcell]
        y = c.pins[c.lib_output].bits()[0]
        ld = load(y)
        best, how = None, None
        for pin in d.inputs:
            src = c.pins[pin].bits()[0]
            t = 0.0 if isinstance(src, int) else arr.get(src, 0.0)
            a = t + timing.arc(d.name, pin).delay(ld)
            if best is None or a > best:
                best, how = a, (name, pin, src)
        arr[y] = best
        pred[y] = how
    ends = {}
    crit = None
    for ename, b in _endpoints(mapped):
        a = 0.0 if isinstance(b, int) else arr.get(b, 0.0)
        ends[ename] = a
        if crit is None or a > ends[crit[0]]:
            crit = (ename, b)
    if crit is None:
        return TimingReport(0.0, 0, [], None, {}, {} if delay_target is not None else None)
    path, levels = _trace(mapped, pred, crit[1])
    path.append(crit[0])
    slack = None
    if delay_target is not None:
        slack = {e: float(delay_target) - a for e, a in ends.items()}
    return TimingReport(ends[crit[0]], levels, path, crit[0], ends, slack)


def _trace(nl, pred, b):
    """Pins along the recorded worst fanin chain ending at bit ``b``."""
    rev = []
    levels = 0
    while not isinstance(b, int) and b in pred:
        cell, pin, src = pred[b]
        if cell is None:  # wire through a BUF
            b = src
            continue
        c = nl.cells[cell]
        if c.kind == "DFF":
            rev.append(f"{cell}/Q")
            return rev[::-1], levels
        rev.append(f"{cell}/{c.lib_output}")
        rev.append(f"{cell}/{pin}")
        levels += 1
        b = src
    rev.append(str(b) if isinstance(b, int) else _bitname(b))
    return rev[::-1], levels


def nand2_area(lib):
    """Area of the library's two-input NAND: the cell named ``NAND2`` if it has
    that function, else the smallest cell that does."""
    cands = [c for c in lib.cells.values() if len(c.inputs) == 2 and c.truth_table() == 0b0111]
    if not cands:
        raise MissingNand2(f"library {lib.name} has no two-input NAND")
    named = [c for c in cands if c.name == "NAND2"]
    return (named or sorted(cands, key=lambda c: (c.area, c.name)))[0].area


def area_report(mapped, lib):
    _check_cells(mapped)
    unit = nand2_area(lib)
    if unit <= 0:
        raise MissingNand2(f"NAND2 in {lib.name} has zero area")
    breakdown = {}
    for c in mapped.cells.values():
        if c.kind == "LIB":
            breakdown[c.libcell] = breakdown.get(c.libcell, 0.0) + lib.cells[c.libcell].area
    total = sum(breakdown.values()) / unit
    return AreaReport(total, {k: v / unit for k, v in sorted(breakdown.items())}, unit)
