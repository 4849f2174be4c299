"""Hand-built netlists shared by several test files."""
from synkit.ir import Netlist


def idx_width(blocks):
    return max(1, (blocks - 1).bit_length())


def part_select(blocks, stride, form="mul", wy=None):
    """``y = a[idx*stride +: wy]`` over a ``blocks*stride``-bit vector."""
    wy = wy or stride
    wi = idx_width(blocks)
    wa = blocks * stride
    nl = Netlist(f"ps{blocks}x{stride}")
    nl.add_port("a", "in", wa)
    if form == "free":
        nl.add_port("s", "in", wi + stride.bit_length())
    else:
        nl.add_port("idx", "in", wi)
    nl.add_port("y", "out", wy)
    if form == "mul":
        ws = wi + stride.bit_length()
        nl.add_net("s", ws)
        nl.add_cell("MUL", "m", {"A": nl.sig("idx"), "B": [(stride >> i) & 1 for i in range(stride.bit_length())],
                                 "Y": nl.sig("s")},
                    {"A_WIDTH": wi, "B_WIDTH": stride.bit_length(), "Y_WIDTH": ws})
        s = nl.sig("s")
    elif form == "concat":
        k = stride.bit_length() - 1
        assert stride == 1 << k
        ws = wi + k
        s = [0] * k + [("idx", i) for i in range(wi)]
    else:  # free shift amount, as wide as the mul form's
        ws = wi + stride.bit_length()
        s = nl.sig("s")
    nl.add_cell("SHIFTX", "sh", {"A": nl.sig("a"), "S": s, "Y": nl.sig("y")},
                {"A_WIDTH": wa, "S_WIDTH": ws, "Y_WIDTH": wy})
    return nl


def word_op(kind, wa, wb, wy=None, names="aby"):
    wy = wy or {"ADD": max(wa, wb) + 1, "SUB": max(wa, wb), "MUL": wa + wb}[kind]
    a, b, y = names
    nl = Netlist(f"{kind.lower()}{wa}x{wb}")
    nl.add_port(a, "in", wa)
    nl.add_port(b, "in", wb)
    nl.add_port(y, "out", wy)
    nl.add_cell(kind, "op", {"A": nl.sig(a), "B": nl.sig(b), "Y": nl.sig(y)},
                {"A_WIDTH": wa, "B_WIDTH": wb, "Y_WIDTH": wy})
    return nl


def mul_add_add(wa, wb, wc, wd):
    """``y = a*b + c + d`` as MUL -> ADD -> ADD."""
    nl = Netlist("muladd")
    for p, w in (("a", wa), ("b", wb), ("c", wc), ("d", wd)):
        nl.add_port(p, "in", w)
    wp = wa + wb
    w1 = max(wp, wc) + 1
    w2 = max(w1, wd) + 1
    nl.add_port("y", "out", w2)
    nl.add_net("p", wp)
    nl.add_net("s", w1)
    nl.add_cell("MUL", "mul", {"A": nl.sig("a"), "B": nl.sig("b"), "Y": nl.sig("p")},
                {"A_WIDTH": wa, "B_WIDTH": wb, "Y_WIDTH": wp})
    nl.add_cell("ADD", "add1", {"A": nl.sig("p"), "B": nl.sig("c"), "Y": nl.sig("s")},
                {"A_WIDTH": wp, "B_WIDTH": wc, "Y_WIDTH": w1})
    nl.add_cell("ADD", "add2", {"A": nl.sig("s"), "B": nl.sig("d"), "Y": nl.sig("y")},
                {"A_WIDTH": w1, "B_WIDTH": wd, "Y_WIDTH": w2})
    return nl
