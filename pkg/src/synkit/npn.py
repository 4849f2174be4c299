"""NPN canonical forms of truth tables (k <= 6 inputs).

A transform ``T = (perm, mask, oneg)`` maps ``f`` to ``g`` with

    g(y) = oneg ^ f(x),   x_i = y[perm[i]] ^ mask_i

so input ``i`` of ``f`` is fed from variable ``perm[i]`` of ``g``.

For k <= 4 every one of the 2 * k! * 2^k transforms is tried and the
numerically smallest image wins.  For k = 5, 6 the search is restricted to
transforms whose image is in *signature normal form* (output onset at most
half, each positive cofactor no larger than its negative one, variables
sorted by cofactor weight), enumerating all ties.  Because that set of
images depends only on the NPN class, its minimum is still a class
invariant, and the form is idempotent; cost grows only for functions with
many symmetric variables.
"""
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernels import transform_min

MAX_K = 6


@dataclass(frozen=True)
class NpnTransform:
    perm: tuple
    mask: int
    oneg: int

    def apply(self, tt, k):
        return apply_transform(tt, k, self)


@dataclass(frozen=True)
class NpnClass:
    canon: int
    k: int
    transform: NpnTransform


def full_mask(k):
    return (1 << (1 << k)) - 1


@lru_cache(maxsize=None)
def var_masks(k):
    """Truth tables of the projections x_0 .. x_{k-1}."""
    out = []
    for i in range(k):
        t = 0
        for m in range(1 << k):
            if (m >> i) & 1:
                t |= 1 << m
        out.append(t)
    return tuple(out)


def apply_transform(tt, k, tr):
    """Reference (loop) application of an NPN transform."""
    res = 0
    for m in range(1 << k):
        src = 0
        for i in range(k):
            src |= (((m >> tr.perm[i]) & 1) ^ ((tr.mask >> i) & 1)) << i
        res |= (((tt >> src) & 1) ^ tr.oneg) << m
    return res


def invert_transform(tr):
    """Transform taking ``T(f)`` back to ``f``."""
    k = len(tr.perm)
    inv = [0] * k
    for i, j in enumerate(tr.perm):
        inv[j] = i
    # f(x) = oneg ^ g(y), y_j = x_{inv[j]} ^ mask_{inv[j]}
    mask = 0
    for j in range(k):
        mask |= ((tr.mask >> inv[j]) & 1) << j
    return NpnTransform(tuple(inv), mask, tr.oneg)


@lru_cache(maxsize=None)
def _perm_table(k):
    perms = list(itertools.permutations(range(k)))
    src = np.zeros((len(perms), 1 << k), dtype=np.int64)
    ms = np.arange(1 << k)
    for p, perm in enumerate(perms):
        acc = np.zeros(1 << k, dtype=np.int64)
        for i in range(k):
            acc |= ((ms >> perm[i]) & 1) << i
        src[p] = acc
    return perms, {perm: p for p, perm in enumerate(perms)}, src


@lru_cache(maxsize=None)
def _all_transforms(k):
    perms, _, src = _perm_table(k)
    masks = np.arange(1 << k, dtype=np.int64)
    maps = (src[:, None, :] ^ masks[None, :, None]).reshape(-1, 1 << k)
    n = maps.shape[0]
    maps = np.concatenate([maps, maps])
    onegs = np.concatenate([np.zeros(n, np.uint8), np.ones(n, np.uint8)])
    meta = [(p, m) for p in range(len(perms)) for m in range(1 << k)]
    return maps, onegs, meta


def _decode(k, idx, meta, onegs):
    perms = _perm_table(k)[0]
    p, m = meta[idx % len(meta)]
    return NpnTransform(perms[p], m, int(onegs[idx]))


def _signature_candidates(tt, k):
    perms, perm_index, src = _perm_table(k)
    n = 1 << k
    full = full_mask(k)
    ones = bin(tt).count("1")
    phases = [0, 1] if 2 * ones == n else [1 if 2 * ones > n else 0]
    vm = var_masks(k)
    blocks = []
    for oneg in phases:
        f = tt ^ (full if oneg else 0)
        pf = bin(f).count("1")
        opts, weight = [], []
        for i in range(k):
            c1 = bin(f & vm[i]).count("1")
            c0 = pf - c1
            opts.append((0,) if c1 < c0 else (1,) if c1 > c0 else (0, 1))
            weight.append(min(c0, c1))
        groups = {}
        for i in sorted(range(k), key=lambda i: weight[i]):
            groups.setdefault(weight[i], []).append(i)
        slots, start = [], 0
        for w in sorted(groups):
            slots.append((groups[w], start))
            start += len(groups[w])
        pidx = []
        for choice in itertools.product(*(itertools.permutations(g) for g, _ in slots)):
            perm = [0] * k
            for (g, base), order in zip(slots, choice):
                for pos, var in enumerate(order):
                    perm[var] = base + pos
            pidx.append(perm_index[tuple(perm)])
        masks = [sum(b << i for i, b in enumerate(bits)) for bits in itertools.product(*opts)]
        pidx = np.array(pidx, dtype=np.int64)
        masks_a = np.array(masks, dtype=np.int64)
        maps = (src[pidx][:, None, :] ^ masks_a[None, :, None]).reshape(-1, n)
        meta = [(int(p), m) for p in pidx for m in masks]
        blocks.append((maps, oneg, meta))
    maps = np.concatenate([b[0] for b in blocks])
    onegs = np.concatenate([np.full(len(b[2]), b[1], np.uint8) for b in blocks])
    meta = [(p, m, b[1]) for b in blocks for (p, m) in b[2]]
    return maps, onegs, meta


@lru_cache(maxsize=1 << 18)
def npn_canon(tt, k):
    """Canonical representative and the transform reaching it."""
    if not 0 <= k <= MAX_K:
        raise ValueError(f"k must be in 0..{MAX_K}")
    tt &= full_mask(k)
    if k == 0:
        return NpnClass(0, 0, NpnTransform((), 0, tt & 1))
    nbits = 1 << k
    if k <= 4:
        maps, onegs, meta = _all_transforms(k)
        best, arg = transform_min(np.array([tt], dtype=np.uint64), maps, onegs, nbits)
        return NpnClass(int(best[0]), k, _decode(k, int(arg[0]), meta, onegs))
    maps, onegs, meta = _signature_candidates(tt, k)
    best, arg = transform_min(np.array([tt], dtype=np.uint64), maps, onegs, nbits)
    perms = _perm_table(k)[0]
    p, m, oneg = meta[int(arg[0])]
    return NpnClass(int(best[0]), k, NpnTransform(perms[p], m, oneg))


def canon_batch(tables, k):
    """Canonical forms for many k <= 4 tables at once."""
    if not 1 <= k <= 4:
        raise ValueError("batch canonicalization supports 1 <= k <= 4")
    maps, onegs, _ = _all_transforms(k)
    best, _ = transform_min(np.asarray(tables, dtype=np.uint64), maps, onegs, 1 << k)
    return best


def support(tt, k):
    """Indices of variables the function depends on."""
    out = []
    vm = var_masks(k)
    for i in range(k):
        step = 1 << i
        hi = tt & vm[i]
        lo = tt & ~vm[i] & full_mask(k)
        if (hi >> step) != lo:
            out.append(i)
    return out


def shrink(tt, k, keep):
    """Re-express ``tt`` over the variables ``keep`` (others must be don't-care)."""
    res = 0
    for m in range(1 << len(keep)):
        src = 0
        for j, i in enumerate(keep):
            src |= ((m >> j) & 1) << i
        res |= ((tt >> src) & 1) << m
    return res
