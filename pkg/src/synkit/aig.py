"""And-inverter graphs.

Literals are ``2 * node + complement``; node 0 is constant false, nodes
``1..npi`` are primary inputs, AND nodes follow (fanin ids are always
smaller than the node id, so ascending id order is topological).
"""
import heapq
import re
from dataclasses import dataclass

from .errors import UnmappedCell
from .ir import Netlist, Port, SignalRef, Cell, kind_inputs, topo_order
from .liberty import eval_expr

CONST0, CONST1 = 0, 1


def lit_id(lit):
    return lit >> 1


def lit_neg(lit):
    return lit & 1


class Aig:
    def __init__(self, name="aig"):
        self.name = name
        self.pi_names = []
        self.f0 = [-1]
        self.f1 = [-1]
        self.lev = [0]
        self.pos = []  # (name, lit)
        self._hash = {}
        self.meta = None

    # -- construction
    @property
    def npi(self):
        return len(self.pi_names)

    def add_pi(self, name):
        if len(self.f0) != self.npi + 1:
            raise ValueError("primary inputs must precede AND nodes")
        self.pi_names.append(name)
        self.f0.append(-1)
        self.f1.append(-1)
        self.lev.append(0)
        return 2 * self.npi

    def and_(self, a, b):
        if a > b:
            a, b = b, a
        if a == CONST0 or a == (b ^ 1):
            return CONST0
        if a == CONST1 or a == b:
            return b
        key = (a, b)
        hit = self._hash.get(key)
        if hit is not None:
            return 2 * hit
        nid = len(self.f0)
        self.f0.append(a)
        self.f1.append(b)
        self.lev.append(max(self.lev[a >> 1], self.lev[b >> 1]) + 1)
        self._hash[key] = nid
        return 2 * nid

    def or_(self, a, b):
        return self.and_(a ^ 1, b ^ 1) ^ 1

    def xor(self, a, b):
        return self.and_(self.and_(a, b ^ 1) ^ 1, self.and_(a ^ 1, b) ^ 1) ^ 1

    def mux(self, a, b, s):
        """``s ? b : a``."""
        return self.and_(self.and_(s, b) ^ 1, self.and_(s ^ 1, a) ^ 1) ^ 1

    def add_po(self, name, lit):
        self.pos.append((name, lit))

    # -- queries
    def is_and(self, nid):
        return nid > self.npi

    def num_nodes(self):
        return len(self.f0)

    def num_ands(self):
        return len(self.f0) - 1 - self.npi

    def depth(self):
        return max((self.lev[l >> 1] for _, l in self.pos), default=0)

    def fanout_counts(self):
        fo = [0] * len(self.f0)
        for n in range(self.npi + 1, len(self.f0)):
            fo[self.f0[n] >> 1] += 1
            fo[self.f1[n] >> 1] += 1
        for _, l in self.pos:
            fo[l >> 1] += 1
        return fo

    def signature(self):
        return (tuple(self.pi_names), tuple(self.f0), tuple(self.f1), tuple(self.pos))

    def reachable(self):
        """AND node ids in the transitive fanin of the outputs, ascending."""
        seen = set()
        stack = [l >> 1 for _, l in self.pos]
        npi = self.npi
        while stack:
            n = stack.pop()
            if n <= npi or n in seen:
                continue
            seen.add(n)
            stack.append(self.f0[n] >> 1)
            stack.append(self.f1[n] >> 1)
        return sorted(seen)

    def cone(self, root, leaves):
        """AND nodes strictly above ``leaves`` up to ``root``, ascending."""
        leaves = set(leaves)
        seen = set()
        stack = [root]
        while stack:
            n = stack.pop()
            if n in leaves or n in seen:
                continue
            if n <= self.npi:
                raise ValueError(f"leaves do not cut node {root} from input {n}")
            seen.add(n)
            stack.append(self.f0[n] >> 1)
            stack.append(self.f1[n] >> 1)
        return sorted(seen)

    def fresh_like(self):
        """Empty graph with the same inputs and interface."""
        new = Aig(self.name)
        for n in self.pi_names:
            new.add_pi(n)
        new.meta = self.meta
        return new

    def cleanup(self):
        """Copy keeping only nodes reachable from the outputs."""
        new = self.fresh_like()
        lit = list(range(0, 2 * (self.npi + 1), 2)) + [None] * self.num_ands()
        for n in self.reachable():
            a, b = self.f0[n], self.f1[n]
            lit[n] = new.and_(lit[a >> 1] ^ (a & 1), lit[b >> 1] ^ (b & 1))
        for name, l in self.pos:
            new.add_po(name, lit[l >> 1] ^ (l & 1))
        return new

    def __repr__(self):
        return f"Aig({self.name!r}, pis={self.npi}, ands={self.num_ands()}, depth={self.depth()})"


def map_lit(lits, l):
    return lits[l >> 1] ^ (l & 1)


# ------------------------------------------------------------------- strash

def _shell(nl):
    """Ports plus register cells of ``nl``: the interface an AIG rebuilds into."""
    shell = Netlist(nl.name, [Port(p.name, p.direction, p.width) for p in nl.ports])
    for p in nl.ports:
        shell.nets[p.name] = nl.nets[p.name]
    for name in sorted(n for n, c in nl.cells.items() if c.kind == "DFF"):
        c = nl.cells[name]
        for b in c.pins["Q"].bits():
            shell.nets[b[0]] = nl.nets[b[0]]
        shell.cells[name] = Cell("DFF", name, {}, {"Q": c.pins["Q"]})
    return shell


def strash(nl, lib=None):
    """Structurally hashed AIG of a gate-level netlist.

    Word-level cells raise :class:`UnmappedCell`; mapped ``LIB`` cells need
    ``lib`` for their functions.  Returns the AIG; ``aig.meta`` holds the
    interface used by :func:`aig_to_netlist`.
    """
    aig = Aig(nl.name)
    val = {}
    for p in nl.inputs():
        for i in range(p.width):
            val[(p.name, i)] = aig.add_pi(f"{p.name}[{i}]")
    dffs = sorted(n for n, c in nl.cells.items() if c.kind == "DFF")
    for name in dffs:
        q = nl.cells[name].pins["Q"].bits()[0]
        val[q] = aig.add_pi(f"{name}.Q")

    def get(ref):
        out = []
        for b in ref.bits():
            out.append(b if isinstance(b, int) else val[b])
        return out

    for name in topo_order(nl):
        c = nl.cells[name]
        k = c.kind
        if k == "DFF":
            continue
        if k == "LIB":
            if lib is None:
                raise UnmappedCell(c.name, c.type_name)
            d = lib.cells[c.libcell]
            env = {p: get(c.pins[p])[0] for p in d.inputs}
            y = _expr_aig(aig, d.function, env)
            val[c.pins[c.lib_output].bits()[0]] = y
            continue
        if k not in ("BUF", "NOT", "AND", "OR", "XOR", "NAND", "NOR", "XNOR", "MUX"):
            raise UnmappedCell(c.name, k)
        ins = [get(c.pins[p])[0] for p in kind_inputs(c)]
        if k == "BUF":
            y = ins[0]
        elif k == "NOT":
            y = ins[0] ^ 1
        elif k in ("AND", "NAND"):
            y = aig.and_(ins[0], ins[1]) ^ (k == "NAND")
        elif k in ("OR", "NOR"):
            y = aig.or_(ins[0], ins[1]) ^ (k == "NOR")
        elif k in ("XOR", "XNOR"):
            y = aig.xor(ins[0], ins[1]) ^ (k == "XNOR")
        else:
            y = aig.mux(ins[0], ins[1], ins[2])
        val[c.pins["Y"].bits()[0]] = y
    for p in nl.outputs():
        for i in range(p.width):
            aig.add_po(f"{p.name}[{i}]", val[(p.name, i)])
    for name in dffs:
        c = nl.cells[name]
        aig.add_po(f"{name}.D", get(c.pins["D"])[0])
        aig.add_po(f"{name}.CLK", get(c.pins["CLK"])[0])
    aig.meta = _shell(nl)
    return aig


def _expr_aig(aig, e, env):
    op = e[0]
    if op == "var":
        return env[e[1]]
    if op == "not":
        return _expr_aig(aig, e[1], env) ^ 1
    a = _expr_aig(aig, e[1], env)
    b = _expr_aig(aig, e[2], env)
    if op == "and":
        return aig.and_(a, b)
    if op == "or":
        return aig.or_(a, b)
    return aig.xor(a, b)


def _parse_bitname(name):
    return _split_bitname(name)


def shell_of(aig):
    """The interface netlist of ``aig``.

    AIGs from :func:`strash` carry it in ``meta``.  Hand-built AIGs get one
    from their PI/PO names: ``x[i]`` names group into multi-bit ports, other
    names become one-bit ports.
    """
    if aig.meta is not None:
        return aig.meta
    shell = Netlist(aig.name)
    for names, direction in ((aig.pi_names, "in"), ([n for n, _ in aig.pos], "out")):
        width = {}
        for n in names:
            base, idx = _split_bitname(n)
            width[base] = max(width.get(base, 0), idx + 1)
        for base, w in width.items():
            shell.add_port(base, direction, w)
    return shell


def _split_bitname(name):
    m = re.fullmatch(r"([A-Za-z_][\w$]*)\[(\d+)\]", name)
    if m:
        return m.group(1), int(m.group(2))
    if not re.fullmatch(r"[A-Za-z_][\w$]*", name):
        raise ValueError(f"cannot derive a port from AIG name {name!r}")
    return name, 0


def aig_to_netlist(aig, name=None):
    """Generic AND/NOT netlist with the AIG's original interface."""
    shell = shell_of(aig)
    nl = Netlist(name or shell.name, [Port(p.name, p.direction, p.width) for p in shell.ports],
                 dict(shell.nets), {})
    prefix = "_a"
    while any(n.startswith(prefix) for n in list(nl.nets) + list(shell.cells)):
        prefix = "_" + prefix
    pi_bit = {}
    for idx, pname in enumerate(aig.pi_names, 1):
        if pname.endswith(".Q"):
            pi_bit[idx] = shell.cells[pname[:-2]].pins["Q"].bits()[0]
        else:
            pi_bit[idx] = _parse_bitname(pname)

    owner, owner_not = {}, {}
    port_pos = []
    for pname, l in aig.pos:
        if "." in pname:
            continue
        b = _parse_bitname(pname)
        port_pos.append((b, l))
        n = l >> 1
        if n == 0:
            continue
        if l & 1:
            owner_not.setdefault(n, b)
        elif aig.is_and(n):
            owner.setdefault(n, b)

    def pos_bit(n):
        if n == 0:
            return 0
        if not aig.is_and(n):
            return pi_bit[n]
        return owner.get(n, (f"{prefix}{n}", 0))

    neg_made = set()

    def lit_bit(l):
        n = l >> 1
        if not l & 1:
            return pos_bit(n)
        if n == 0:
            return 1
        if n not in neg_made:
            neg_made.add(n)
            out = owner_not.get(n, (f"{prefix}n{n}", 0))
            if out[0].startswith(prefix):
                nl.nets[out[0]] = _net(out[0])
            nl.add_cell("NOT", f"{prefix}n{n}", {"A": [pos_bit(n)], "Y": [out]})
        return owner_not.get(n, (f"{prefix}n{n}", 0))

    for n in aig.reachable():
        out = pos_bit(n)
        if out[0].startswith(prefix):
            nl.nets[out[0]] = _net(out[0])
        nl.add_cell("AND", f"{prefix}{n}", {
            "A": [lit_bit(aig.f0[n])], "B": [lit_bit(aig.f1[n])], "Y": [out]})
    k = 0
    for b, l in port_pos:
        src = lit_bit(l)
        if src != b:
            while f"{prefix}buf{k}" in nl.cells:
                k += 1
            nl.add_cell("BUF", f"{prefix}buf{k}", {"A": [src], "Y": [b]})
            k += 1
    po = dict(aig.pos)
    for cname, c in shell.cells.items():
        nl.cells[cname] = Cell("DFF", cname, {}, {
            "D": SignalRef.from_bits([lit_bit(po[f"{cname}.D"])]),
            "CLK": SignalRef.from_bits([lit_bit(po[f"{cname}.CLK"])]),
            "Q": c.pins["Q"]})
    return nl


def _net(name):
    from .ir import Net
    return Net(name, 1)


# --------------------------------------------------------------------- cuts

@dataclass(frozen=True)
class Cut:
    root: int
    leaves: tuple
    tt: int  # over len(leaves) variables, leaf order

    @property
    def size(self):
        return len(self.leaves)


_VM6 = (0xAAAAAAAAAAAAAAAA, 0xCCCCCCCCCCCCCCCC, 0xF0F0F0F0F0F0F0F0,
        0xFF00FF00FF00FF00, 0xFFFF0000FFFF0000, 0xFFFFFFFF00000000)
_FULL6 = (1 << 64) - 1


def _swap_masks():
    res = {}
    for i in range(6):
        for j in range(i + 1, 6):
            a = _VM6[i] & ~_VM6[j] & _FULL6
            b = ~_VM6[i] & _VM6[j] & _FULL6
            res[(i, j)] = (a, b, (1 << j) - (1 << i), ~(a | b) & _FULL6)
    return res


_SWAP = _swap_masks()


def _expand(tt, sub, full):
    """Re-index a 6-var-space table over ``sub`` leaves onto ``full`` leaves."""
    if sub == full:
        return tt
    pos = {leaf: i for i, leaf in enumerate(full)}
    for j in range(len(sub) - 1, -1, -1):
        p = pos[sub[j]]
        if p != j:
            a, b, sh, keep = _SWAP[(j, p)]
            tt = (tt & keep) | ((tt & a) << sh) | ((tt & b) >> sh)
    return tt


def enumerate_cuts(aig, K=6, C=8):
    """Priority cuts per node: ``cuts[n]`` lists the trivial cut, then up to
    ``C`` cuts ranked by (leaf count, leaves).  Dominated cuts are dropped.
    Truth tables are over the leaf order.
    """
    if not 1 <= K <= 6:
        raise ValueError("K must be in 1..6")
    n_nodes = aig.num_nodes()
    cuts6 = [None] * n_nodes  # (leaves, tt in 6-var space)
    cuts6[0] = [((), 0)]
    for n in range(1, aig.npi + 1):
        cuts6[n] = [((n,), _VM6[0])]
    for n in range(aig.npi + 1, n_nodes):
        a, b = aig.f0[n], aig.f1[n]
        ca, cb = cuts6[a >> 1], cuts6[b >> 1]
        na, nb = a & 1, b & 1
        cand = {}
        for la, ta in ca:
            sa = set(la)
            for lb, tb in cb:
                u = sa.union(lb)
                if len(u) > K:
                    continue
                leaves = tuple(sorted(u))
                if leaves in cand:
                    continue
                x = _expand(ta, la, leaves)
                y = _expand(tb, lb, leaves)
                if na:
                    x ^= _FULL6
                if nb:
                    y ^= _FULL6
                cand[leaves] = x & y
        ranked = sorted(cand, key=lambda l: (len(l), l))
        kept = []
        for leaves in ranked:
            s = set(leaves)
            if any(set(k).issubset(s) for k, _ in kept):
                continue
            kept.append((leaves, cand[leaves]))
            if len(kept) == C:
                break
        cuts6[n] = [((n,), _VM6[0])] + kept
    out = []
    for n in range(n_nodes):
        lst = []
        for leaves, tt in cuts6[n]:
            k = len(leaves)
            lst.append(Cut(n, leaves, tt & ((1 << (1 << k)) - 1)))
        out.append(lst)
    return out


def cut_truth(aig, cut):
    """Truth table of the cone under ``cut`` by direct simulation."""
    k = len(cut.leaves)
    if k > 6:
        raise ValueError("cuts are limited to 6 leaves")
    full = (1 << (1 << k)) - 1
    val = {0: 0}
    for i, leaf in enumerate(cut.leaves):
        t = 0
        for m in range(1 << k):
            if (m >> i) & 1:
                t |= 1 << m
        val[leaf] = t
    for n in aig.cone(cut.root, cut.leaves):
        a, b = aig.f0[n], aig.f1[n]
        x = val[a >> 1] ^ (full if a & 1 else 0)
        y = val[b >> 1] ^ (full if b & 1 else 0)
        val[n] = x & y
    return val[cut.root]


# ---------------------------------------------------------------- balancing

def balance(aig):
    """Rebuild AND super-gates as minimum-depth trees.

    A super-gate grows through uncomplemented, single-fanout AND fanins, so
    OR trees (ANDs of complemented literals) are covered as well and no logic
    is duplicated.  Leaves are combined earliest-arrival first.
    """
    fo = aig.fanout_counts()
    new = aig.fresh_like()
    lit = list(range(0, 2 * (aig.npi + 1), 2)) + [None] * aig.num_ands()
    npi = aig.npi

    def expandable(l):
        n = l >> 1
        return not (l & 1) and n > npi and fo[n] == 1

    roots = set()
    for _, l in aig.pos:
        roots.add(l >> 1)
    for n in aig.reachable():
        for l in (aig.f0[n], aig.f1[n]):
            if not expandable(l):
                roots.add(l >> 1)
    for n in sorted(r for r in roots if r > npi):
        leaves = []
        stack = [aig.f1[n], aig.f0[n]]
        while stack:
            l = stack.pop()
            if expandable(l):
                m = l >> 1
                stack.append(aig.f1[m])
                stack.append(aig.f0[m])
            else:
                leaves.append(lit[l >> 1] ^ (l & 1))
        uniq = set(leaves)
        if any(x ^ 1 in uniq for x in uniq) or CONST0 in uniq:
            lit[n] = CONST0
            continue
        uniq.discard(CONST1)
        if not uniq:
            lit[n] = CONST1
            continue
        heap = [(new.lev[x >> 1], x) for x in uniq]
        heapq.heapify(heap)
        while len(heap) > 1:
            _, x = heapq.heappop(heap)
            _, y = heapq.heappop(heap)
            z = new.and_(x, y)
            heapq.heappush(heap, (new.lev[z >> 1], z))
        lit[n] = heap[0][1]
    for name, l in aig.pos:
        new.add_po(name, lit[l >> 1] ^ (l & 1))
    return new.cleanup()


def local_rewrite(aig):
    """Single-node rules: constant folding, double complements (both implicit
    in hashing) and AND absorption ``x & (x & y) = x & y``,
    ``!x & (x & y) = 0``."""
    new = aig.fresh_like()
    lit = list(range(0, 2 * (aig.npi + 1), 2)) + [None] * aig.num_ands()
    npi = new.npi

    def absorb(x, y):
        m = y >> 1
        if not (y & 1) and m > npi:
            p, q = new.f0[m], new.f1[m]
            if x == p or x == q:
                return y
            if x ^ 1 == p or x ^ 1 == q:
                return CONST0
        return None

    for n in aig.reachable():
        a = map_lit(lit, aig.f0[n])
        b = map_lit(lit, aig.f1[n])
        r = absorb(a, b)
        if r is None:
            r = absorb(b, a)
        lit[n] = new.and_(a, b) if r is None else r
    for name, l in aig.pos:
        new.add_po(name, map_lit(lit, l))
    return new.cleanup()


def simulate_aig(aig, pi_values):
    """Evaluate POs for python-int bit-parallel PI patterns (test helper)."""
    mask = -1
    val = [0] + list(pi_values) + [0] * aig.num_ands()
    for n in range(aig.npi + 1, aig.num_nodes()):
        a, b = aig.f0[n], aig.f1[n]
        x = val[a >> 1] ^ (mask if a & 1 else 0)
        y = val[b >> 1] ^ (mask if b & 1 else 0)
        val[n] = x & y
    return [val[l >> 1] ^ (mask if l & 1 else 0) for _, l in aig.pos]
