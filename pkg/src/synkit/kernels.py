"""Hot numeric kernels.

Each kernel has a numba implementation and a numpy fallback with identical
results; ``_accel.HAVE_NUMBA`` picks one.  Both variants stay importable so
the benchmark and the parity tests can call them directly.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

# gate opcodes shared with verify.Simulator
OP_BUF, OP_NOT, OP_AND, OP_OR, OP_XOR, OP_NAND, OP_NOR, OP_XNOR, OP_MUX = range(9)

ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


# ---------------------------------------------------------------- simulation

@njit
def _run_gates_jit(ops, ia, ib, ic, out, vals):
    nw = vals.shape[1]
    for g in range(ops.shape[0]):
        op = ops[g]
        a = ia[g]
        b = ib[g]
        c = ic[g]
        o = out[g]
        for w in range(nw):
            x = vals[a, w]
            y = vals[b, w]
            if op == 0:
                r = x
            elif op == 1:
                r = ~x
            elif op == 2:
                r = x & y
            elif op == 3:
                r = x | y
            elif op == 4:
                r = x ^ y
            elif op == 5:
                r = ~(x & y)
            elif op == 6:
                r = ~(x | y)
            elif op == 7:
                r = ~(x ^ y)
            else:
                s = vals[c, w]
                r = (x & ~s) | (y & s)
            vals[o, w] = r


def _run_gates_np(ops, ia, ib, ic, out, vals):
    band, bor, bxor, binv = np.bitwise_and, np.bitwise_or, np.bitwise_xor, np.invert
    tmp = np.empty(vals.shape[1], dtype=np.uint64)
    for op, a, b, c, o in zip(ops.tolist(), ia.tolist(), ib.tolist(),
                              ic.tolist(), out.tolist()):
        dst = vals[o]
        if op == OP_BUF:
            dst[:] = vals[a]
        elif op == OP_NOT:
            binv(vals[a], out=dst)
        elif op == OP_AND:
            band(vals[a], vals[b], out=dst)
        elif op == OP_OR:
            bor(vals[a], vals[b], out=dst)
        elif op == OP_XOR:
            bxor(vals[a], vals[b], out=dst)
        elif op == OP_NAND:
            band(vals[a], vals[b], out=dst)
            binv(dst, out=dst)
        elif op == OP_NOR:
            bor(vals[a], vals[b], out=dst)
            binv(dst, out=dst)
        elif op == OP_XNOR:
            bxor(vals[a], vals[b], out=dst)
            binv(dst, out=dst)
        else:
            # s ? b : a  ==  a ^ ((a ^ b) & s)
            bxor(vals[a], vals[b], out=tmp)
            band(tmp, vals[c], out=tmp)
            bxor(vals[a], tmp, out=dst)


def run_gates(ops, ia, ib, ic, out, vals):
    """Evaluate a levelized gate program in place over packed 64-bit words.

    ``vals`` is ``(n_signals, n_words)`` uint64; gate ``g`` reads rows
    ``ia[g]``, ``ib[g]``, ``ic[g]`` and writes row ``out[g]``.
    """
    if len(ops) == 0:
        return
    if HAVE_NUMBA:
        _run_gates_jit(ops, ia, ib, ic, out, vals)
    else:
        _run_gates_np(ops, ia, ib, ic, out, vals)


# ---------------------------------------------------------- truth tables

@njit
def _transform_min_jit(tables, maps, onegs, nbits):
    n = tables.shape[0]
    t_count = maps.shape[0]
    best = np.empty(n, dtype=np.uint64)
    arg = np.empty(n, dtype=np.int64)
    one = np.uint64(1)
    if nbits == 64:
        full = np.uint64(0xFFFFFFFFFFFFFFFF)
    else:
        full = (one << np.uint64(nbits)) - one
    for i in range(n):
        t = tables[i]
        b = full
        ba = -1
        for k in range(t_count):
            v = np.uint64(0)
            for m in range(nbits):
                if (t >> np.uint64(maps[k, m])) & one:
                    v |= one << np.uint64(m)
            if onegs[k]:
                v = v ^ full
            if ba < 0 or v < b:
                b = v
                ba = k
        best[i] = b
        arg[i] = ba
    return best, arg


def _pack_rows(bits):
    """(N, M<=64) 0/1 uint8 -> (N,) uint64, bit m of row = column m."""
    n, m = bits.shape
    if m < 64:
        padded = np.zeros((n, 64), dtype=np.uint8)
        padded[:, :m] = bits
        bits = padded
    packed = np.packbits(bits, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").reshape(n)


def _transform_min_np(tables, maps, onegs, nbits):
    n = tables.shape[0]
    shifts = np.arange(nbits, dtype=np.uint64)
    bits = ((tables[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
    full = ALL_ONES if nbits == 64 else np.uint64((1 << nbits) - 1)
    best = np.full(n, full, dtype=np.uint64)
    arg = np.full(n, -1, dtype=np.int64)
    for k in range(maps.shape[0]):
        v = _pack_rows(bits[:, maps[k]])
        if onegs[k]:
            v = v ^ full
        better = (v < best) | (arg < 0)
        best = np.where(better, v, best)
        arg = np.where(better, k, arg)
    return best, arg


def _transform_min_gather(tables, maps, onegs, nbits):
    # single table, many transforms: vectorize over transforms instead
    t = int(tables[0])
    bits = np.array([(t >> m) & 1 for m in range(nbits)], dtype=np.uint8)
    v = _pack_rows(bits[maps])
    full = ALL_ONES if nbits == 64 else np.uint64((1 << nbits) - 1)
    v = np.where(onegs.astype(bool), v ^ full, v)
    k = int(np.argmin(v))
    return np.array([v[k]], dtype=np.uint64), np.array([k], dtype=np.int64)


def transform_min(tables, maps, onegs, nbits):
    """Minimum image of each table over a set of input transforms.

    Transform ``k`` maps table ``t`` to ``t'`` with
    ``t'[m] = t[maps[k, m]] ^ onegs[k]``.  Returns ``(minima, argmin)``;
    ties resolve to the lowest transform index.
    """
    tables = np.ascontiguousarray(tables, dtype=np.uint64)
    maps = np.ascontiguousarray(maps, dtype=np.int64)
    onegs = np.ascontiguousarray(onegs, dtype=np.uint8)
    if HAVE_NUMBA:
        return _transform_min_jit(tables, maps, onegs, nbits)
    if tables.shape[0] == 1:
        return _transform_min_gather(tables, maps, onegs, nbits)
    return _transform_min_np(tables, maps, onegs, nbits)
