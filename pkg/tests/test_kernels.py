import os
import subprocess
import sys

import numpy as np
from hypothesis import given, strategies as st

from synkit import _accel, kernels as K

from oracles import npn_image


def _program(rng, n_in, n_gates):
    ops = rng.integers(0, 9, n_gates)
    ia, ib, ic = (np.array([rng.integers(0, n_in + g) for g in range(n_gates)]) for _ in range(3))
    out = np.arange(n_in, n_in + n_gates)
    return [a.astype(np.int64) for a in (ops, ia, ib, ic, out)]


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 40), st.integers(1, 3))
def test_run_gates_parity(seed, n_in, n_gates, n_words):
    rng = np.random.default_rng(seed)
    prog = _program(rng, n_in, n_gates)
    vals = np.zeros((n_in + n_gates, n_words), dtype=np.uint64)
    vals[:n_in] = rng.integers(0, 2**63, (n_in, n_words), dtype=np.uint64) * np.uint64(2) + \
        rng.integers(0, 2, (n_in, n_words), dtype=np.uint64)
    a, b = vals.copy(), vals.copy()
    K._run_gates_jit(*prog, a)
    K._run_gates_np(*prog, b)
    assert np.array_equal(a, b)


def test_run_gates_bitwise_semantics():
    x, y, s = (np.uint64(v) for v in (0b1100, 0b1010, 0b0110))
    vals = np.array([[x], [y], [s]] + [[0]] * 9, dtype=np.uint64)
    ops = np.arange(9, dtype=np.int64)
    ia = np.zeros(9, np.int64)
    ib = np.ones(9, np.int64)
    ic = np.full(9, 2, np.int64)
    out = np.arange(3, 12, dtype=np.int64)
    K.run_gates(ops, ia, ib, ic, out, vals)
    got = [int(v) & 0xF for v in vals[3:, 0]]
    assert got == [0b1100, 0b0011, 0b1000, 0b1110, 0b0110, 0b0111, 0b0001, 0b1001, 0b1010]


def _maps(k, rng, count):
    """Random input transforms as index maps over minterms."""
    maps, onegs, desc = [], [], []
    for _ in range(count):
        perm = [int(i) for i in rng.permutation(k)]
        mask = int(rng.integers(0, 1 << k))
        oneg = int(rng.integers(0, 2))
        row = []
        for m in range(1 << k):
            src = 0
            for i in range(k):
                src |= (((m >> perm[i]) & 1) ^ ((mask >> i) & 1)) << i
            row.append(src)
        maps.append(row)
        onegs.append(oneg)
        desc.append((perm, mask, oneg))
    return np.array(maps), np.array(onegs), desc


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 8))
def test_transform_min_parity_and_oracle(seed, k, n_tables):
    rng = np.random.default_rng(seed)
    nb = 1 << k
    tables = np.array([int(rng.integers(0, 1 << 32)) << 32 | int(rng.integers(0, 1 << 32))
                       for _ in range(n_tables)], dtype=np.uint64) & np.uint64((1 << nb) - 1)
    maps, onegs, desc = _maps(k, rng, 12)
    r1 = K._transform_min_jit(tables, maps, onegs.astype(np.uint8), nb)
    r2 = K._transform_min_np(tables, maps, onegs.astype(np.uint8), nb)
    assert np.array_equal(r1[0], r2[0]) and np.array_equal(r1[1], r2[1])
    for t, best, arg in zip(tables.tolist(), r1[0].tolist(), r1[1].tolist()):
        images = [npn_image(t, k, *d) for d in desc]
        assert best == min(images)
        assert arg == images.index(best)
    g = K._transform_min_gather(tables[:1], maps, onegs, nb)
    assert int(g[0][0]) == int(r1[0][0]) and int(g[1][0]) == int(r1[1][0])


def test_backend_switch():
    assert _accel.backend() in ("numba", "numpy")
    env = dict(os.environ, SYNKIT_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "from synkit import _accel; print(_accel.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
