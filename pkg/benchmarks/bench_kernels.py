"""Benchmark the numba kernels against the pure-numpy fallback.

Synthesizes lifted boundary pairs of a smoothed ball, then times greedy
net insertion, covering-radius queries and cap-hit counting on both
backends.  Run:

    PYTHONPATH=src python3 benchmarks/bench_kernels.py [--n 200000]
"""

import argparse
import time

import numpy as np

from polyfine import _kernels as K


def synth_pairs(rng, n, d=3):
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    x = 0.998 * u
    return np.hstack([x, u])


def bench_insert(pairs, rho, backend, batch=8192):
    d = pairs.shape[1] // 2
    idx = K.SeparatedSetIndex(d, rho, backend=backend)
    t0 = time.perf_counter()
    streak = 0
    i = 0
    while i < len(pairs):
        chunk = pairs[i:i + batch]
        done, streak = idx.insert_greedy(chunk, streak, 50, 1000)
        i += done
        if done < len(chunk):
            break
    dt = time.perf_counter() - t0
    return idx, i, dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200000)
    ap.add_argument("--rho", type=float, default=0.05)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    pairs = synth_pairs(rng, args.n)
    queries = synth_pairs(rng, args.n // 4)
    normals = synth_pairs(rng, 4000)[:, 3:]
    thresholds = np.full(4000, 0.95)
    points = pairs[: args.n // 4, :3]

    backends = ["numpy"] + (["numba"] if K._HAVE_NUMBA else [])
    rows = []
    nets = {}
    for b in backends:
        if b == "numba":   # trigger jit compilation outside the timers
            bench_insert(pairs[:4096], args.rho, b)
        idx, processed, t_ins = bench_insert(pairs, args.rho, b)
        t0 = time.perf_counter()
        dists = idx.min_pair_dists(queries)
        t_q = time.perf_counter() - t0
        t0 = time.perf_counter()
        counts = K.cap_hit_counts(points, normals, thresholds, backend=b)
        t_c = time.perf_counter() - t0
        nets[b] = (idx.n, idx.pairs.copy(), dists, counts)
        rows.append((b, idx.n, processed / t_ins, t_ins, t_q, t_c))

    print(f"{'backend':>8} {'net':>8} {'cand/s':>12} {'insert s':>10} "
          f"{'query s':>9} {'caphits s':>10}")
    for b, n, rate, t_ins, t_q, t_c in rows:
        print(f"{b:>8} {n:>8} {rate:>12.0f} {t_ins:>10.3f} {t_q:>9.3f} {t_c:>10.3f}")

    if len(nets) == 2:
        same_net = (nets["numba"][0] == nets["numpy"][0]
                    and np.array_equal(nets["numba"][1], nets["numpy"][1]))
        same_q = np.allclose(nets["numba"][2], nets["numpy"][2])
        same_c = np.array_equal(nets["numba"][3], nets["numpy"][3])
        print(f"backends agree: net={same_net} queries={same_q} caphits={same_c}")


if __name__ == "__main__":
    main()
