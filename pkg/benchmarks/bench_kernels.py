#!/usr/bin/env python3
"""Compare the jitted kernels against their pure-numpy fallbacks.

Runs each hot kernel on representative sizes under both backends and prints
a timing table.  The numpy column is produced by the *_np fallbacks in-
process; re-running the whole script with TAT_NUMBA=0 gives the end-to-end
numpy behavior (including the exact engine's materialized path).
"""

import argparse
import statistics
import time

import numpy as np

import tatkit as tk
from tatkit import kernels
from tatkit.tensorops import col_kron


def median_time(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if not kernels.NUMBA_ENABLED:
        print("numba backend is off (TAT_NUMBA=0 or numba missing); "
              "only numpy timings are meaningful here")

    n = args.n
    rng = np.random.default_rng(0)
    rows = []

    basis = tk.build_basis(2, 12)
    m = rng.uniform(-1, 1, (n, 2))
    w = np.ones(basis.size)
    rows.append((
        f"feature_rows n={n} k={basis.size}",
        median_time(lambda: kernels.feature_rows(m, basis.exponents, w), args.repeats)
        if kernels.NUMBA_ENABLED else None,
        median_time(lambda: kernels.feature_rows_np(m, basis.exponents, w),
                    args.repeats),
    ))

    k1, k2 = 128, 4
    u = rng.uniform(-1, 1, (n, k1))
    g = rng.uniform(-1, 1, (k1, k2))
    v = rng.uniform(-1, 1, (n, k2))
    rows.append((
        f"bilinear_rows n={n} k1={k1} k2={k2}",
        median_time(lambda: kernels.bilinear_rows(u, g, v), args.repeats)
        if kernels.NUMBA_ENABLED else None,
        median_time(lambda: kernels.bilinear_rows_np(u, g, v), args.repeats),
    ))

    hn = 32
    hi = tk.make_hard_instance(hn, 4, 3.0, 0)
    rows.append((
        f"hard_probe_rows n={hn}",
        median_time(lambda: kernels.hard_probe_rows(hi.H, hi.V, 0.5), args.repeats)
        if kernels.NUMBA_ENABLED else None,
        median_time(lambda: kernels.hard_probe_rows_np(hi.H, hi.V, 0.5),
                    args.repeats),
    ))

    en = 64
    inst = tk.random_instance(en, 2, 0.8, 0)
    q, kk1, kk2, v1, v2 = inst.projected()

    def exact_numpy():
        scores = (q / inst.d) @ col_kron(kk1, kk2).T
        mx = scores.max(axis=1)
        a = np.exp(scores - mx[:, None])
        f = a / a.sum(axis=1)[:, None]
        h = col_kron(v1, v2)
        vres = f @ h - inst.E
        ww = vres @ h.T
        fw = f * ww
        p = fw - fw.sum(axis=1)[:, None] * f
        p3 = p.reshape(en, en, en)
        t1 = np.tensordot(p3, inst.A2, axes=(1, 0))
        t2 = np.tensordot(t1, inst.A3, axes=(1, 0))
        return np.tensordot(inst.A1, t2, axes=(0, 0))

    rows.append((
        f"exact gradient core n={en}",
        median_time(
            lambda: kernels.grad_row_contract_stream(
                q / inst.d, kk1, kk2, v1, v2, inst.E, inst.A2, inst.A3),
            args.repeats)
        if kernels.NUMBA_ENABLED else None,
        median_time(exact_numpy, args.repeats),
    ))

    print(f"{'kernel':40s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name, t_nb, t_np in rows:
        nb = f"{t_nb * 1e3:9.3f} ms" if t_nb is not None else "        --"
        ratio = f"{t_np / t_nb:7.1f}x" if t_nb else "      --"
        print(f"{name:40s} {nb:>12s} {t_np * 1e3:9.3f} ms {ratio:>8s}")


if __name__ == "__main__":
    main()
