"""Time the compiled and pure-Python kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from harseq import kernels


def _inputs(rng, T, C, d_max):
    init = rng.normal(size=C)
    trans = rng.normal(size=(C, C))
    emit = rng.normal(size=(T, C))
    log_trans = np.log(rng.dirichlet(np.ones(C), size=C))
    np.fill_diagonal(log_trans, -np.inf)
    log_dur = np.log(rng.dirichlet(np.ones(d_max), size=C))
    return init, trans, emit, log_trans, log_dur


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(repeat=3, T=1440, C=10, d_max=120, seed=0):
    rng = np.random.default_rng(seed)
    init, trans, emit, log_trans, log_dur = _inputs(rng, T, C, d_max)
    alpha = kernels.chain_forward(init, trans, emit)
    beta = kernels.chain_backward(trans, emit)
    log_z = float(np.logaddexp.reduce(alpha[-1]))
    cases = {
        "chain_forward": lambda k: k.chain_forward(init, trans, emit),
        "chain_backward": lambda k: k.chain_backward(trans, emit),
        "edge_expectation": lambda k: k.edge_expectation(alpha, beta, trans, emit, log_z),
        "chain_viterbi": lambda k: k.chain_viterbi(init, trans, emit),
        "hsmm_viterbi": lambda k: k.hsmm_viterbi(init, log_trans, log_dur, emit),
    }
    rows = []
    for name, call in cases.items():
        times = {}
        for backend in kernels.available_backends():
            prev = kernels.set_backend(backend)
            try:
                times[backend] = _time(lambda: call(kernels), repeat)
            finally:
                kernels.set_backend(prev)
        rows.append((name, times))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--T", type=int, default=1440)
    ap.add_argument("--C", type=int, default=10)
    ap.add_argument("--dmax", type=int, default=120)
    a = ap.parse_args()
    rows = run(a.repeat, a.T, a.C, a.dmax)
    print(f"T={a.T} C={a.C} d_max={a.dmax}, best of {a.repeat}")
    print(f"{'kernel':18s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, t in rows:
        py, cy = t.get("python"), t.get("cython")
        cy_s = f"{1e3 * cy:10.2f}" if cy is not None else f"{'n/a':>10s}"
        sp = f"{py / cy:7.1f}x" if cy else f"{'n/a':>8s}"
        print(f"{name:18s} {1e3 * py:10.2f} {cy_s} {sp}")


if __name__ == "__main__":
    main()
