"""Small shared assertions."""
from synkit.aig import aig_to_netlist
from synkit.verify import Equivalent, check_equiv


def assert_equiv(a, b, **kw):
    if not hasattr(a, "cells"):
        a = aig_to_netlist(a)
    if not hasattr(b, "cells"):
        b = aig_to_netlist(b)
    res = check_equiv(a, b, **kw)
    assert isinstance(res, Equivalent), res
    return res


def gate_module(kind, n_in=2):
    from synkit.ir import Netlist
    nl = Netlist(kind.lower())
    nl.add_port("a", "in", n_in)
    nl.add_port("y", "out")
    pins = {p: [("a", i)] for i, p in enumerate("AB"[:n_in])}
    pins["Y"] = [("y", 0)]
    nl.add_cell(kind, "g", pins)
    return nl
