"""Time the numba kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_backends.py [--repeat 3] [--quick]

Both backends are imported explicitly through ``kernels.get`` so the
``HITSTAT_BACKEND`` setting does not matter here. Each workload is run once
untimed (numba compiles on first call), then ``--repeat`` times; the table
shows the best wall time and the largest absolute difference in outputs.
"""

import argparse
import time

import numpy as np

from hitstat import kernels
from hitstat.constructions import cycle_graph, g_m, graph_walk_chain, random_reversible


def _best(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(quick):
    cyc = graph_walk_chain(cycle_graph(256 if quick else 1024)).csr
    rev = random_reversible(64, seed=1, lazy_hold=0.5).chain
    gm = g_m(4 if quick else 5)
    gcsr = gm.chain.csr
    n = rev.n
    T = 500 if quick else 2000

    pi = np.full(n, 1.0 / n)
    V = np.eye(n)
    alive = np.ones(gm.chain.n, dtype=bool)
    alive[gm.designated["y"]] = False
    starts = np.zeros((1, cyc[0].shape[0] - 1))
    starts[0, 0] = 1.0

    def run_max(K, k):
        # the kernel updates its buffers in place
        V = starts.copy()
        bufs = (np.zeros((1, k)), np.zeros((1, k)), np.zeros((1, k), np.int64), np.zeros((1, k), np.int64))
        K.running_max(*cyc, V, T * 4, 0, *bufs)
        return bufs

    yield "evolve (64 starts, reversible n=64)", lambda K: K.evolve(*rev.csr, V, T)
    yield "tv_trace (reversible n=64)", lambda K: K.tv_trace(*rev.csr, V, pi, T)
    yield (
        f"hitting_many (G_m n={gm.chain.n})",
        lambda K: K.hitting_many(
            *gcsr,
            np.eye(gm.chain.n)[[gm.designated["x"]]],
            np.array([gm.designated["y"]], dtype=np.int64),
            T * 4,
        ),
    )
    yield (
        f"killed_trace (G_m n={gm.chain.n})",
        lambda K: K.killed_trace(
            *gcsr, np.eye(gm.chain.n)[[gm.designated["x"]]], alive, np.array([gm.designated["x"]], dtype=np.int64), T * 4
        ),
    )
    m = cyc[0].shape[0] - 1
    yield (
        f"running_max (cycle n={m})",
        lambda K: run_max(K, m),
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args(argv)

    nb, npy = kernels.get("numba"), kernels.get("numpy")
    print(f"{'workload':44s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in _workloads(args.quick):
        a, b = fn(nb), fn(npy)
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        diff = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)))) for x, y in zip(a, b))
        t_nb = _best(lambda: fn(nb), args.repeat)
        t_np = _best(lambda: fn(npy), args.repeat)
        print(f"{name:44s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
