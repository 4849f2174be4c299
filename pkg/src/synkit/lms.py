"""Lazy man's synthesis: a record library of small AIG structures keyed by
NPN class, and cut rewriting against it.

A record structure is a little AIG over ``k`` abstract inputs.  Literals use
``2 * id + complement`` with ids ``0..k-1`` for the inputs and ``k + i`` for
node ``i``.
"""
from dataclasses import dataclass, field

from .aig import Aig, balance, enumerate_cuts, local_rewrite
from .errors import NonCanonicalEntry, SemanticError, SyntaxError_
from .npn import full_mask, invert_transform, npn_canon, shrink, support, var_masks


@dataclass(frozen=True)
class Structure:
    k: int
    nodes: tuple  # ((lit_a, lit_b), ...)
    out: int

    @property
    def ands(self):
        return len(self.nodes)

    def levels(self):
        lev = [0] * (self.k + len(self.nodes))
        for i, (a, b) in enumerate(self.nodes):
            lev[self.k + i] = max(lev[a >> 1], lev[b >> 1]) + 1
        return lev

    @property
    def depth(self):
        return self.levels()[self.out >> 1]

    def input_depths(self):
        """Longest path from each input to the output (``-1`` if unused)."""
        n = self.k + len(self.nodes)
        dist = [-1] * n
        dist[self.out >> 1] = 0
        for i in range(len(self.nodes) - 1, -1, -1):
            d = dist[self.k + i]
            if d < 0:
                continue
            for lit in self.nodes[i]:
                j = lit >> 1
                dist[j] = max(dist[j], d + 1)
        return dist[:self.k]

    def truth(self):
        full = full_mask(self.k)
        val = list(var_masks(self.k)) + [0] * len(self.nodes)
        for i, (a, b) in enumerate(self.nodes):
            x = val[a >> 1] ^ (full if a & 1 else 0)
            y = val[b >> 1] ^ (full if b & 1 else 0)
            val[self.k + i] = x & y
        return val[self.out >> 1] ^ (full if self.out & 1 else 0)

    def build(self, aig, inputs):
        """Instantiate into ``aig`` with input literals ``inputs``."""
        lits = list(inputs) + [0] * len(self.nodes)
        for i, (a, b) in enumerate(self.nodes):
            lits[self.k + i] = aig.and_(lits[a >> 1] ^ (a & 1), lits[b >> 1] ^ (b & 1))
        return lits[self.out >> 1] ^ (self.out & 1)


@dataclass(frozen=True)
class Record:
    tt: int
    k: int
    structure: Structure

    @property
    def ands(self):
        return self.structure.ands

    @property
    def depth(self):
        return self.structure.depth

    def cost(self):
        return (self.depth, self.ands)


@dataclass
class RecordLibrary:
    K: int = 6
    entries: dict = field(default_factory=dict)  # (k, canon tt) -> Record

    def __len__(self):
        return len(self.entries)

    def offer(self, rec):
        """Store ``rec`` if its class is new or it is strictly better."""
        key = (rec.k, rec.tt)
        old = self.entries.get(key)
        if old is None or rec.cost() < old.cost():
            self.entries[key] = rec
            return True
        return False

    def __eq__(self, other):
        return isinstance(other, RecordLibrary) and self.K == other.K and self.entries == other.entries


# ------------------------------------------------------------ cone handling

def _remap(struct, perm, mask, oneg):
    """Structure for ``g`` given one for ``f`` and ``g = T(f)``: input ``i``
    of ``f`` is fed by ``y[perm[i]] ^ mask_i``."""
    k = struct.k
    m = {i: 2 * perm[i] + ((mask >> i) & 1) for i in range(k)}
    nodes = []

    def tr(lit):
        j = lit >> 1
        if j < k:
            return m[j] ^ (lit & 1)
        return lit

    for a, b in struct.nodes:
        nodes.append((tr(a), tr(b)))
    return Structure(k, tuple(nodes), tr(struct.out) ^ oneg)


def cone_structure(aig, cut):
    """The cone under ``cut`` as a :class:`Structure` over the leaf order."""
    k = len(cut.leaves)
    ids = {leaf: i for i, leaf in enumerate(cut.leaves)}
    nodes = []
    for n in aig.cone(cut.root, cut.leaves):
        ids[n] = k + len(nodes)
        a, b = aig.f0[n], aig.f1[n]
        nodes.append((2 * ids[a >> 1] + (a & 1), 2 * ids[b >> 1] + (b & 1)))
    return Structure(k, tuple(nodes), 2 * ids[cut.root])


def record_add(lib, aig, K=None, C=8):
    """Harvest every full-support cut of ``aig`` into ``lib``.

    Returns the number of entries added or improved.
    """
    K = K or lib.K
    if K != lib.K:
        raise ValueError(f"library is K={lib.K}, asked for K={K}")
    cuts = enumerate_cuts(aig, min(K, 6), C)
    changed = 0
    for n in range(aig.npi + 1, aig.num_nodes()):
        for cut in cuts[n][1:]:
            k = len(cut.leaves)
            if k < 2 or len(support(cut.tt, k)) != k:
                continue
            cls = npn_canon(cut.tt, k)
            t = cls.transform
            struct = _remap(cone_structure(aig, cut), t.perm, t.mask, t.oneg)
            if struct.truth() != cls.canon:
                raise AssertionError("record structure does not match its key")
            changed += lib.offer(Record(cls.canon, k, struct))
    return changed


def record_probe(lib, tt, k):
    """``(structure, transform)`` implementing ``tt`` or ``None``.

    The structure implements the stored canonical function; feeding its
    input ``j`` with ``x[transform.perm[j]] ^ mask_j`` and complementing the
    output by ``transform.oneg`` yields ``tt``.
    """
    if k > lib.K:
        return None
    cls = npn_canon(tt, k)
    rec = lib.entries.get((k, cls.canon))
    if rec is None:
        return None
    return rec.structure, invert_transform(cls.transform)


def instantiate(aig, structure, transform, leaf_lits):
    ins = [leaf_lits[transform.perm[j]] ^ ((transform.mask >> j) & 1)
           for j in range(structure.k)]
    return structure.build(aig, ins) ^ transform.oneg


# ------------------------------------------------------------- rewriting

def _mffc_size(aig, root, leaves, fanout):
    leaves = set(leaves)
    ref = {}
    size = 0
    stack = [root]
    while stack:
        n = stack.pop()
        size += 1
        for lit in (aig.f0[n], aig.f1[n]):
            f = lit >> 1
            if f in leaves or not aig.is_and(f):
                continue
            ref[f] = ref.get(f, fanout[f]) - 1
            if ref[f] == 0:
                stack.append(f)
    return size


def lms_rewrite(aig, lib, K=6, C=8):
    """Replace cones by recorded structures when (depth, ands) improves."""
    if not lib.entries:
        return aig
    K = min(K, lib.K, 6)
    cuts = enumerate_cuts(aig, K, C)
    fanout = aig.fanout_counts()
    n_nodes = aig.num_nodes()
    arr = [0] * n_nodes
    choice = [None] * n_nodes
    for n in range(aig.npi + 1, n_nodes):
        keep = max(arr[aig.f0[n] >> 1], arr[aig.f1[n] >> 1]) + 1
        best = None
        for cut in cuts[n][1:]:
            k = len(cut.leaves)
            sup = support(cut.tt, k)
            if len(sup) < 2:
                continue
            tt = shrink(cut.tt, k, sup) if len(sup) < k else cut.tt
            hit = record_probe(lib, tt, len(sup))
            if hit is None:
                continue
            struct, tr = hit
            leaves = [cut.leaves[i] for i in sup]
            depths = struct.input_depths()
            a = 0
            for j, d in enumerate(depths):
                if d >= 0:
                    a = max(a, arr[leaves[tr.perm[j]]] + d)
            gain = (a, struct.ands)
            old = (keep, _mffc_size(aig, n, cut.leaves, fanout))
            if gain < old and (best is None or gain < best[0]):
                best = (gain, struct, tr, leaves)
        if best is None:
            arr[n] = keep
        else:
            arr[n] = best[0][0]
            choice[n] = best[1:]
    if not any(choice):
        return aig
    # nodes reachable through the chosen implementation
    need = set()
    stack = [lit >> 1 for _, lit in aig.pos]
    while stack:
        n = stack.pop()
        if n <= aig.npi or n in need:
            continue
        need.add(n)
        if choice[n] is None:
            stack += [aig.f0[n] >> 1, aig.f1[n] >> 1]
        else:
            stack += list(choice[n][2])
    new = aig.fresh_like()
    lit = list(range(0, 2 * (aig.npi + 1), 2)) + [None] * aig.num_ands()
    for n in sorted(need):
        if choice[n] is None:
            a, b = aig.f0[n], aig.f1[n]
            lit[n] = new.and_(lit[a >> 1] ^ (a & 1), lit[b >> 1] ^ (b & 1))
        else:
            struct, tr, leaves = choice[n]
            lit[n] = instantiate(new, struct, tr, [lit[x] for x in leaves])
    for name, l in aig.pos:
        new.add_po(name, lit[l >> 1] ^ (l & 1))
    return new.cleanup()


@dataclass
class ScriptResult:
    aig: Aig
    trace: list  # (iteration, ands, depth)
    fixpoint: int = None  # first iteration that changed nothing

    @property
    def converged(self):
        return self.fixpoint is not None


def lms_iteration(aig, lib, K=6):
    """One pass of strash, record rewrite, local rewrite and balancing."""
    return balance(local_rewrite(lms_rewrite(aig.cleanup(), lib, K)))


def lms_script(aig, lib, iters=12, K=6):
    """Iterate :func:`lms_iteration`; an iteration is kept only if it
    strictly lowers (depth, ands).  The first rejected iteration is a
    fixpoint: later ones would see the same input and do the same."""
    if not 1 <= iters <= 100:
        raise ValueError("iters must be in 1..100")
    cur = aig
    trace = [(0, cur.num_ands(), cur.depth())]
    fix = None
    for it in range(1, iters + 1):
        if fix is None:
            nxt = lms_iteration(cur, lib, K)
            if (nxt.depth(), nxt.num_ands()) < (cur.depth(), cur.num_ands()):
                cur = nxt
            else:
                fix = it
        trace.append((it, cur.num_ands(), cur.depth()))
    return ScriptResult(cur, trace, fix)


# ------------------------------------------------------------ .srl format

def _op(lit, k):
    j = lit >> 1
    name = f"x{j}" if j < k else f"n{j - k}"
    return ("!" if lit & 1 else "") + name


def write_record_library(lib):
    lines = [f"recordlib K={lib.K}"]
    for (k, tt) in sorted(lib.entries):
        rec = lib.entries[(k, tt)]
        s = rec.structure
        digits = max(1, (1 << k) // 4)
        lines.append(f"rec tt={tt:0{digits}x} k={k} ands={s.ands} depth={s.depth}")
        for i, (a, b) in enumerate(s.nodes):
            lines.append(f"n{i} = AND({_op(a, k)}, {_op(b, k)})")
        lines.append(f"out = {_op(s.out, k)}")
    return "\n".join(lines) + "\n"


def _parse_op(tok, k, n_nodes, lineno):
    tok = tok.strip()
    neg = tok.startswith("!")
    name = tok[1:] if neg else tok
    if len(name) < 2 or name[0] not in "xn" or not name[1:].isdigit():
        raise SyntaxError_(f"bad operand {tok!r}", lineno, 1, "xJ, nJ or !-prefixed")
    j = int(name[1:])
    if name[0] == "x":
        if j >= k:
            raise SemanticError(f"input x{j} out of range for k={k}", lineno, 1)
        return 2 * j + neg
    if j >= n_nodes:
        raise SemanticError(f"node n{j} used before definition", lineno, 1)
    return 2 * (k + j) + neg


def read_record_library(text):
    lib = None
    cur = None  # [tt, k, ands, depth, nodes, line]

    def close():
        if cur is None:
            return
        tt, k, ands, depth, nodes, out, ln = cur
        if out is None:
            raise SyntaxError_("record without 'out' line", ln, 1, "out = ...")
        s = Structure(k, tuple(nodes), out)
        if s.ands != ands or s.depth != depth:
            raise SemanticError(f"record cost ands={ands} depth={depth} does not match structure"
                                f" (ands={s.ands}, depth={s.depth})", ln, 1)
        if s.truth() != tt:
            raise SemanticError("record structure does not compute its truth table", ln, 1)
        if npn_canon(tt, k).canon != tt:
            raise NonCanonicalEntry(f"tt={tt:x} k={k} is not NPN-canonical", ln, 1)
        if (k, tt) in lib.entries:
            raise SemanticError(f"duplicate record tt={tt:x} k={k}", ln, 1)
        lib.entries[(k, tt)] = Record(tt, k, s)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if lib is None:
            if words[0] != "recordlib" or len(words) != 2 or not words[1].startswith("K="):
                raise SyntaxError_(f"unexpected {line!r}", lineno, 1, "recordlib K=INT")
            try:
                kk = int(words[1][2:])
            except ValueError:
                raise SyntaxError_("bad K value", lineno, 1) from None
            if not 1 <= kk <= 6:
                raise SemanticError("K must be in 1..6", lineno, 1)
            lib = RecordLibrary(kk)
            continue
        if words[0] == "rec":
            close()
            kv = {}
            for w in words[1:]:
                if "=" not in w:
                    raise SyntaxError_(f"unexpected {w!r}", lineno, 1, "key=value")
                key, val = w.split("=", 1)
                kv[key] = val
            if set(kv) != {"tt", "k", "ands", "depth"}:
                raise SyntaxError_("rec needs tt=, k=, ands=, depth=", lineno, 1)
            try:
                tt = int(kv["tt"], 16)
                k, ands, depth = int(kv["k"]), int(kv["ands"]), int(kv["depth"])
            except ValueError:
                raise SyntaxError_("bad number in rec line", lineno, 1) from None
            if not 1 <= k <= lib.K:
                raise SemanticError(f"k={k} outside 1..{lib.K}", lineno, 1)
            if tt >> (1 << k):
                raise SemanticError(f"tt wider than 2^{k} bits", lineno, 1)
            cur = [tt, k, ands, depth, [], None, lineno]
            continue
        if cur is None:
            raise SyntaxError_(f"unexpected {words[0]!r}", lineno, 1, "rec")
        if cur[5] is not None:
            raise SyntaxError_("node after 'out'", lineno, 1, "rec")
        if "=" not in line:
            raise SyntaxError_(f"unexpected {line!r}", lineno, 1, "nI = AND(a, b) or out = lit")
        lhs, rhs = (x.strip() for x in line.split("=", 1))
        k = cur[1]
        if lhs == "out":
            cur[5] = _parse_op(rhs, k, len(cur[4]), lineno)
            continue
        if lhs != f"n{len(cur[4])}":
            raise SyntaxError_(f"expected n{len(cur[4])}", lineno, 1, f"n{len(cur[4])}")
        if not (rhs.startswith("AND(") and rhs.endswith(")")) or rhs.count(",") != 1:
            raise SyntaxError_(f"bad node {rhs!r}", lineno, len(lhs) + 4, "AND(a, b)")
        a, b = rhs[4:-1].split(",")
        cur[4].append((_parse_op(a, k, len(cur[4]), lineno), _parse_op(b, k, len(cur[4]), lineno)))
    if lib is None:
        raise SyntaxError_("empty input", 1, 1, "recordlib K=INT")
    close()
    return lib


def load_record_library(path):
    with open(path) as f:
        return read_record_library(f.read())
