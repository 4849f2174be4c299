"""Quality-of-results records and their CSV/JSON emission."""
import csv
import io
import json
import resource
import sys
from dataclasses import dataclass

from .aig import strash
from .errors import EmptyReport
from .ir import GENERIC_GATES, WORD_CELLS, logic_depth
from .lau import lau_replace, unit_gate_cost
from .opt import shift_to_blockmux
from .sta import area_report, sta
from .techmap import map_cells

COLUMNS = ("label", "area_ge", "arrival_ps", "logic_levels", "gates", "wall_s")
VOLATILE = ("wall_s",)


@dataclass
class QorRecord:
    label: str
    area_ge: float
    arrival_ps: float
    logic_levels: int
    gates: int
    wall_s: float = 0.0
    peak_rss: int = 0

    def __post_init__(self):
        for f in ("area_ge", "arrival_ps", "logic_levels", "gates", "wall_s", "peak_rss"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be >= 0")

    def row(self):
        return {
            "label": self.label,
            "area_ge": f"{self.area_ge:.4f}",
            "arrival_ps": f"{self.arrival_ps:.4f}",
            "logic_levels": str(self.logic_levels),
            "gates": str(self.gates),
            "wall_s": f"{self.wall_s:.3f}",
        }


def peak_rss():
    """Peak resident set size of this process in bytes (best effort)."""
    kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return kb if sys.platform == "darwin" else kb * 1024


def gate_count(nl):
    return sum(1 for c in nl.cells.values()
               if c.kind in WORD_CELLS or c.kind == "LIB" or (c.kind in GENERIC_GATES and c.kind != "BUF"))


def lower_for_cost(nl, grade="medium"):
    """Generic-gate copy of ``nl``: shifts lowered, arithmetic generated."""
    if not any(c.kind in WORD_CELLS for c in nl.cells.values()):
        return nl
    return lau_replace(shift_to_blockmux(nl), grade)


def measure(nl, label, lib=None, timing=None, wall_s=0.0, delay_target=None):
    """QoR of one netlist.

    Mapped netlists are timed as they are.  Generic netlists are mapped first
    when a library and timing are given; without them area and arrival fall
    back to the unit-gate model (area in AND2 equivalents, delay in gate
    units) and levels are generic gate levels.
    """
    gates = gate_count(nl)
    mapped = all(c.kind in ("LIB", "BUF", "DFF") for c in nl.cells.values())
    if lib is not None and timing is not None:
        m = nl
        if not mapped or not any(c.kind == "LIB" for c in nl.cells.values()):
            m = map_cells(strash(lower_for_cost(nl)), lib, timing, delay_target)
        t = sta(m, lib, timing)
        return QorRecord(label, area_report(m, lib).total_ge, t.arrival, t.levels, gates,
                         wall_s, peak_rss())
    g = lower_for_cost(nl)
    cost = unit_gate_cost(g)
    return QorRecord(label, float(cost.area), float(cost.delay), logic_depth(g), gates,
                     wall_s, peak_rss())


def report_at(records):
    """CSV text with one row per record, in the given order."""
    if not records:
        raise EmptyReport("no QoR records to report")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def report_json(records):
    """JSON mirror of :func:`report_at`: same columns, same string values."""
    if not records:
        raise EmptyReport("no QoR records to report")
    return json.dumps([r.row() for r in records], indent=2) + "\n"


def strip_volatile(csv_text):
    """CSV text with the wall-time column removed, for golden comparison."""
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        return ""
    keep = [i for i, h in enumerate(rows[0]) if h not in VOLATILE]
    return "\n".join(",".join(r[i] for i in keep) for r in rows) + "\n"
