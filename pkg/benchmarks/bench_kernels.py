"""Compare the numba and numpy variants of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both variants are called directly, so ``SYNKIT_NUMBA`` does not matter here.
Without numba installed only the numpy column is filled in.
"""
import argparse
import time

import numpy as np

from synkit import kernels as K
from synkit._accel import HAVE_NUMBA
from synkit.lau import gen_mul
from synkit.npn import _all_transforms
from synkit.verify import Simulator


def best_of(fn, repeat):
    fn()  # warm-up (includes jit compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sim_case(nwords):
    sim = Simulator(gen_mul(16, 16, "fast"))
    rng = np.random.default_rng(42)
    pi = rng.integers(0, 1 << 64, size=(sim.n_pi, nwords), dtype=np.uint64, endpoint=False)
    base = np.zeros((sim.nrows, nwords), dtype=np.uint64)
    base[1] = K.ALL_ONES
    base[2:2 + sim.n_pi] = pi
    args = (sim._ops, sim._ia, sim._ib, sim._ic, sim._out)

    def run(impl):
        vals = base.copy()
        impl(*args, vals)
        return vals
    return f"run_gates ({sim.n_gates} gates x {nwords} words)", run


def npn_case(count):
    maps, onegs, _ = _all_transforms(4)
    rng = np.random.default_rng(42)
    tables = rng.integers(0, 1 << 16, size=count, dtype=np.uint64)

    def run(impl):
        return impl(tables, maps, onegs, 16)
    return f"transform_min ({count} 4-input tables x {len(maps)} transforms)", run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = [
        (sim_case(4096), K._run_gates_jit, K._run_gates_np),
        (npn_case(2000), K._transform_min_jit, K._transform_min_np),
    ]
    print(f"{'kernel':58s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for (label, run), jit, ref in cases:
        t_np = best_of(lambda: run(ref), args.repeat)
        if HAVE_NUMBA:
            a, b = run(jit), run(ref)
            same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) \
                else np.array_equal(a, b)
            if not same:
                raise SystemExit(f"{label}: numba and numpy results differ")
            t_jit = best_of(lambda: run(jit), args.repeat)
            print(f"{label:58s} {t_np:10.4f} {t_jit:10.4f} {t_np / t_jit:7.1f}x")
        else:
            print(f"{label:58s} {t_np:10.4f} {'n/a':>10s} {'':>8s}")


if __name__ == "__main__":
    main()
