import random

import pytest
from hypothesis import given, strategies as st

from synkit.ir import logic_depth, stats, validate
from synkit.lau import (SpeedGrade, gen_adder, gen_macc, gen_macc_split, gen_mul, gen_pp,
                        lau_replace, prefix_network, reduce_tree, unit_gate_cost)
from synkit.verify import Exhaustive, Random

from circuits import mul_add_add, word_op
from helpers import assert_equiv, gate_module
from oracles import booth_rows, brent_kung_size, eval_netlist, sklansky_size, wallace_stages

GRADES = list(SpeedGrade)


# ----------------------------------------------------------- prefix adders

@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_prefix_sizes(n):
    lg = n.bit_length() - 1
    sk = prefix_network(n, "sklansky")
    assert (sk.depth, sk.size) == (lg, sklansky_size(n))
    assert sk.size == (n // 2) * lg
    bk = prefix_network(n, "brent-kung")
    assert (bk.depth, bk.size) == (2 * lg - 2, brent_kung_size(n))


@pytest.mark.parametrize("arch", ["sklansky", "brent-kung", "ripple"])
def test_prefix_spans(arch):
    for n in range(2, 65):
        net = prefix_network(n, arch)
        assert net.spans() == [(i, 0) for i in range(n)]
        done = {}
        for op in net.nodes:  # operands must be available at an earlier level
            for span in (op.left, op.right):
                assert done.get(span, 0) < op.level or span[0] == span[1]
            done[(op.pos, op.right[1])] = op.level


def test_sklansky_depth_non_power_of_two():
    for n in range(2, 65):
        assert prefix_network(n, "sklansky").depth == (n - 1).bit_length()


def test_half_adder():
    for g in GRADES:
        s = stats(gen_adder(1, g))
        assert (s["XOR"], s["AND"], s["generic"] - s["BUF"]) == (1, 1, 2)


@pytest.mark.parametrize("arch", ["ripple", "brent-kung", "sklansky"])
def test_adders_exhaustive(arch):
    for n in range(1, 8):
        nl = gen_adder(n, arch)
        for a in range(1 << n):
            for b in range(1 << n):
                assert eval_netlist(nl, {"A": a, "B": b})["Y"] == a + b


@pytest.mark.parametrize("arch", ["ripple", "brent-kung", "sklansky"])
def test_adders_exhaustive_10_bits(arch):
    for n in (9, 10):
        assert_equiv(gen_adder(n, arch), word_op("ADD", n, n, names="ABY"), mode=Exhaustive(20))


# ------------------------------------------------------- partial products

@pytest.mark.parametrize("n", range(2, 65))
def test_pp_row_counts(n):
    assert gen_pp(n, n, "none").row_count == n + 1
    assert gen_pp(n, n, "booth-r4").row_count == booth_rows(n)


@pytest.mark.parametrize("enc", ["none", "booth-r4"])
def test_pp_sum_is_product(enc):
    for wa, wb in ((2, 2), (3, 4), (4, 3)):
        pp = gen_pp(wa, wb, enc)
        nl = pp.to_netlist()
        for a in range(1 << wa):
            for b in range(1 << wb):
                out = eval_netlist(nl, {"A": a, "B": b})
                total = sum(out[f"R{j}"] << r.offset for j, r in enumerate(pp.rows))
                assert total % (1 << pp.wout) == a * b


# ------------------------------------------------------------ compressors

@pytest.mark.parametrize("rows", [28, 54])
def test_wallace_stages(rows):
    n = 53
    pp = gen_pp(n, n, "booth-r4" if rows == 28 else "none")
    assert pp.row_count == rows
    tree = reduce_tree(pp, "wallace")
    assert tree.stage_count == wallace_stages(rows)[0]
    assert tree.conserved()
    assert max(tree.stages[-1].heights_out) <= 2


def test_array_three_rows():
    pp = gen_pp(2, 3, "none")
    assert sum(1 for r in pp.rows if any(r.bits)) == 3  # the correction row is empty
    assert reduce_tree(pp, "array").stage_count == 1


@pytest.mark.parametrize("style", ["wallace", "array"])
def test_column_conservation(style):
    for n in (3, 8, 17):
        for enc in ("none", "booth-r4"):
            assert reduce_tree(gen_pp(n, n, enc), style).conserved()


# --------------------------------------------------- multipliers and MACC

def test_mul_4x4_fast_exhaustive():
    nl = gen_mul(4, 4, "fast")
    for a in range(16):
        for b in range(16):
            assert eval_netlist(nl, {"A": a, "B": b})["Y"] == a * b


def test_mul_1x1_is_and():
    for g in GRADES:
        s = stats(gen_mul(1, 1, g))
        assert s["AND"] == 1 and s["generic"] - s["BUF"] == 1


def test_mul_8x8_grades():
    small, fast = gen_mul(8, 8, "small"), gen_mul(8, 8, "fast")
    assert_equiv(small, fast)
    assert unit_gate_cost(fast).delay < unit_gate_cost(small).delay


def test_macc_small_exhaustive():
    for g in GRADES:
        nl = gen_macc(3, 3, 6, 6, g)
        assert_equiv(nl, _macc_ref(3, 3, 6, 6), mode=Random(20000, 1))
    nl = gen_macc(2, 2, 3, 3, "fast")
    assert_equiv(nl, _macc_ref(2, 2, 3, 3), mode=Exhaustive(16))


def test_macc_split_small():
    assert_equiv(gen_macc_split(3, 3, 6, 6), _macc_ref(3, 3, 6, 6), mode=Random(20000, 2))


def test_macc_zero_addends_is_mul():
    m = gen_macc(3, 3, 1, 1, "medium")
    for a in range(8):
        for b in range(8):
            assert eval_netlist(m, {"A": a, "B": b, "C": 0, "D": 0})["Y"] == a * b


def _macc_ref(wa, wb, wc, wd):
    from synkit.ir import Netlist, macc_width
    nl = Netlist("ref")
    for p, w in (("A", wa), ("B", wb), ("C", wc), ("D", wd)):
        nl.add_port(p, "in", w)
    wy = macc_width(wa, wb, wc, wd)
    nl.add_port("Y", "out", wy)
    nl.add_cell("MACC", "m", {p: nl.sig(p) for p in "ABCDY"},
                {"A_WIDTH": wa, "B_WIDTH": wb, "C_WIDTH": wc, "D_WIDTH": wd, "Y_WIDTH": wy})
    return nl


@pytest.mark.parametrize("n", [8, 16])
def test_grade_delay_ordering(n):
    d = {g: unit_gate_cost(gen_macc(n, n, 2 * n, 2 * n, g)).delay for g in GRADES}
    assert d[SpeedGrade.FAST] <= d[SpeedGrade.MEDIUM] <= d[SpeedGrade.SMALL]


# ---------------------------------------------------------- cost model

def test_unit_gate_cost_examples():
    c = unit_gate_cost(gate_module("XOR"))
    assert (c.area, c.delay) == (2, 2)
    fa = gen_adder(2, "ripple")
    # bit 1 is a full adder with carry-in from the bit-0 half adder
    assert unit_gate_cost(fa).area == 3 + 7


def test_full_adder_cost():
    from synkit.ir import Builder, Netlist
    from synkit.lau import _fa
    nl = Netlist("fa")
    nl.add_port("x", "in", 3)
    nl.add_port("y", "out", 2)
    bld = Builder(nl)
    s, c = _fa(bld, ("x", 0), ("x", 1), ("x", 2))
    bld.drive([s, c], [("y", 0), ("y", 1)])
    cost = unit_gate_cost(nl)
    assert cost.area == 7
    assert cost.delay == 4
    for v in range(8):
        assert eval_netlist(nl, {"x": v})["y"] == bin(v).count("1")


# ---------------------------------------------------------- lau_replace

def test_replace_add_medium():
    nl = word_op("ADD", 8, 8)
    out = lau_replace(nl, "medium")
    assert stats(out)["ADD"] == 0
    assert validate(out) == []
    assert_equiv(nl, out)


def test_replace_mixed_widths():
    from synkit.ir import Netlist
    nl = Netlist("mix")
    for p, w in (("a", 5), ("b", 5), ("c", 12), ("d", 12)):
        nl.add_port(p, "in", w)
    nl.add_port("p", "out", 10)
    nl.add_port("q", "out", 24)
    nl.add_cell("MUL", "m1", {"A": nl.sig("a"), "B": nl.sig("b"), "Y": nl.sig("p")},
                {"A_WIDTH": 5, "B_WIDTH": 5, "Y_WIDTH": 10})
    nl.add_cell("MUL", "m2", {"A": nl.sig("c"), "B": nl.sig("d"), "Y": nl.sig("q")},
                {"A_WIDTH": 12, "B_WIDTH": 12, "Y_WIDTH": 24})
    for g in GRADES:
        out = lau_replace(nl, g)
        assert stats(out)["MUL"] == 0
        assert_equiv(nl, out, mode=Random(20000, 3))


def test_replace_no_arith_unchanged():
    nl = gate_module("AND")
    assert lau_replace(nl, "fast") == nl


@given(st.sampled_from(["ADD", "SUB", "MUL"]), st.integers(1, 6), st.integers(1, 6),
       st.sampled_from(GRADES), st.integers(0, 3))
def test_replace_truncated_widths(kind, wa, wb, grade, trim):
    nl = word_op(kind, wa, wb)
    wy = nl.port("y").width
    if trim and wy > trim:
        nl = word_op(kind, wa, wb, wy - trim)
    assert_equiv(nl, lau_replace(nl, grade))


def test_replace_macc_fused():
    from synkit.opt import infer_macc
    nl = infer_macc(mul_add_add(4, 3, 5, 6))
    for g in GRADES:
        assert_equiv(nl, lau_replace(nl, g))
    assert logic_depth(lau_replace(nl, "fast")) > 0


def test_random_macc_bignum():
    rng = random.Random(5)
    nl = gen_macc(12, 9, 20, 15, "fast")
    for _ in range(200):
        a, b, c, d = (rng.getrandbits(w) for w in (12, 9, 20, 15))
        assert eval_netlist(nl, {"A": a, "B": b, "C": c, "D": d})["Y"] == a * b + c + d
