import pytest
from hypothesis import given, strategies as st

from synkit.errors import CombinationalLoop
from synkit.ir import Netlist, logic_depth, stats, topo_order, validate
from synkit.lau import SpeedGrade, gen_adder

from netgen import random_netlist


def _rules(nl):
    return {v.rule for v in validate(nl)}


def test_minimal_module_is_valid():
    nl = Netlist("t")
    nl.add_port("a", "in")
    nl.add_port("y", "out")
    nl.add_cell("BUF", "b", {"A": [("a", 0)], "Y": [("y", 0)]})
    assert validate(nl) == []


def test_width_mismatch():
    nl = Netlist("t")
    nl.add_port("a", "in", 4)
    nl.add_port("b", "in", 4)
    nl.add_port("y", "out", 5)
    nl.add_cell("ADD", "add", {"A": nl.sig("a"), "B": nl.sig("b"), "Y": nl.sig("y")},
                {"A_WIDTH": 4, "B_WIDTH": 4, "Y_WIDTH": 3})
    assert "width-mismatch" in _rules(nl)


def test_multiple_drivers():
    nl = Netlist("t")
    nl.add_port("a", "in")
    nl.add_port("y", "out")
    for n in ("g0", "g1"):
        nl.add_cell("AND", n, {"A": [("a", 0)], "B": [("a", 0)], "Y": [("y", 0)]})
    assert "multiple-drivers" in _rules(nl)


def test_undeclared_net_and_index_range():
    nl = Netlist("t")
    nl.add_port("a", "in", 2)
    nl.add_port("y", "out")
    nl.add_cell("AND", "g", {"A": [("a", 2)], "B": [("zz", 0)], "Y": [("y", 0)]})
    assert {"index-range", "undeclared-net"} <= _rules(nl)


def test_shiftx_and_macc_widths():
    nl = Netlist("t")
    nl.add_port("a", "in", 4)
    nl.add_port("s", "in", 2)
    nl.add_port("y", "out", 5)
    nl.add_cell("SHIFTX", "sh", {"A": nl.sig("a"), "S": nl.sig("s"), "Y": nl.sig("y")},
                {"A_WIDTH": 4, "S_WIDTH": 2, "Y_WIDTH": 5})
    assert "shiftx-width" in _rules(nl)

    nl = Netlist("m")
    for p, w in (("a", 3), ("b", 3), ("c", 6), ("d", 6)):
        nl.add_port(p, "in", w)
    nl.add_port("y", "out", 7)
    nl.add_cell("MACC", "m", {p: nl.sig(p.lower()) for p in "ABCD"} | {"Y": nl.sig("y")},
                {"A_WIDTH": 3, "B_WIDTH": 3, "C_WIDTH": 6, "D_WIDTH": 6, "Y_WIDTH": 7})
    assert "macc-width" in _rules(nl)  # max(6, 6, 6) + 2 = 8


def _chain():
    nl = Netlist("t")
    nl.add_port("a", "in")
    nl.add_port("y", "out")
    nl.add_net("n1")
    nl.add_net("n2")
    nl.add_cell("BUF", "z3", {"A": [("n2", 0)], "Y": [("y", 0)]})
    nl.add_cell("BUF", "a1", {"A": [("a", 0)], "Y": [("n1", 0)]})
    nl.add_cell("BUF", "m2", {"A": [("n1", 0)], "Y": [("n2", 0)]})
    return nl


def test_topo_chain():
    assert topo_order(_chain()) == ["a1", "m2", "z3"]


def test_self_loop():
    nl = Netlist("t")
    nl.add_port("y", "out")
    nl.add_cell("NOT", "inv", {"A": [("y", 0)], "Y": [("y", 0)]})
    with pytest.raises(CombinationalLoop):
        topo_order(nl)
    assert "combinational-loop" in _rules(nl)


def test_register_breaks_cycle():
    nl = Netlist("t")
    nl.add_port("clk", "in")
    nl.add_port("y", "out")
    nl.add_net("q")
    nl.add_cell("NOT", "inv", {"A": [("q", 0)], "Y": [("y", 0)]})
    nl.add_cell("DFF", "r", {"D": [("y", 0)], "CLK": [("clk", 0)], "Q": [("q", 0)]})
    assert validate(nl) == []
    assert topo_order(nl) == ["r", "inv"]


def test_stats_examples():
    nl = Netlist("t")
    nl.add_port("a", "in")
    for i in range(3):
        nl.add_net(f"n{i}")
        nl.add_cell("AND", f"g{i}", {"A": [("a", 0)], "B": [("a", 0)], "Y": [(f"n{i}", 0)]})
    nl.add_net("m")
    nl.add_cell("NOT", "inv", {"A": [("n0", 0)], "Y": [("m", 0)]})
    s = stats(nl)
    assert (s["AND"], s["NOT"], s["total"]) == (3, 1, 4)
    assert all(v == 0 for v in stats(Netlist("e")).values())


def test_ripple_adder_counts():
    # bit 0 is a half adder, bits 1..n-1 full adders (2 XOR, 2 AND, 1 OR)
    n = 8
    s = stats(gen_adder(n, SpeedGrade.SMALL))
    assert (s["XOR"], s["AND"], s["OR"]) == (1 + 2 * (n - 1), 1 + 2 * (n - 1), n - 1)


def test_logic_depth_ignores_buf():
    assert logic_depth(_chain()) == 0


@given(st.integers(0, 10**6))
def test_random_netlists_valid(seed):
    assert validate(random_netlist(seed, words=True, dffs=True)) == []


@given(st.integers(0, 10**6))
def test_topo_respects_edges(seed):
    nl = random_netlist(seed, words=True, dffs=True)
    order = topo_order(nl)
    assert sorted(order) == sorted(nl.cells)
    pos = {n: i for i, n in enumerate(order)}
    drv = nl.drivers()
    for c in nl.cells.values():
        if c.kind == "DFF":
            continue
        for pin, ref in c.pins.items():
            if pin == "Y":
                continue
            for b in ref.bits():
                d = drv.get(b) if not isinstance(b, int) else None
                if d and d[0] and nl.cells[d[0]].kind != "DFF":
                    assert pos[d[0]] < pos[c.name]


@given(st.integers(0, 10**6))
def test_stats_total(seed):
    nl = random_netlist(seed, words=True)
    s = stats(nl)
    assert s["total"] == len(nl.cells)
    assert sum(v for k, v in s.items() if k not in ("total", "generic")) == len(nl.cells)
