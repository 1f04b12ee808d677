#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python reference.

Both backends draw identical random streams, so the outputs are checked for
equality while timing.  Run from the repository root:

    python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from stoqsim import oracle
from stoqsim.guiding import as_regularized, uniform_guide
from stoqsim.kernels import pyref
from stoqsim.model import LocalTerm, ProblemInstance, StoquasticHamiltonian, protocol_params
from stoqsim.rng import stream_state
from stoqsim.walk import transition_matrix_csr

try:
    from stoqsim import _core

    HAVE_CORE = True
except ImportError:
    HAVE_CORE = False


def _timeit(fn, *args, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_walk():
    rng = np.random.default_rng(2)
    terms = []
    n = 6
    for _ in range(4):
        k = int(rng.integers(1, 4))
        support = sorted(rng.choice(n, size=k, replace=False).tolist())
        dim = 1 << k
        diag = rng.uniform(-1, 1, dim)
        off = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                off[i, j] = -rng.uniform(0, 1)
        terms.append(LocalTerm(support, np.diag(diag) + off + off.T))
    h = StoquasticHamiltonian(n, terms)
    lam = oracle.ground_energy_exact(h)
    params = protocol_params(ProblemInstance(h, lam, min(lam + 0.4, h.total_norm())))
    reg = as_regularized(uniform_guide(n))
    indptr, indices, data = transition_matrix_csr(h, params, lam, reg)
    trials = 5000
    args = (indptr, indices, data, 0, 6, 7, 1, 0, trials)
    rows = []
    t_py, out_py = _timeit(pyref.walk_trajectories, *args, repeat=1)
    rows.append(("branching walk (5k trials x 6 steps)", t_py, None, out_py))
    if HAVE_CORE:
        t_c, out_c = _timeit(_core.walk_trajectories, *args)
        assert np.array_equal(out_py, out_c), "backend mismatch"
        rows[-1] = (rows[-1][0], t_py, t_c, None)
    return rows


def bench_sw():
    rng = np.random.default_rng(3)
    n = 200
    eu = np.arange(n - 1, dtype=np.int32)
    ev = np.arange(1, n, dtype=np.int32)
    w = rng.uniform(0.2, 1.5, n - 1)
    state = stream_state(5, 0, 2)
    sweeps = 300

    def run(impl):
        spins = np.ones(n, dtype=np.int8)  # fresh start: sweeps mutate in place
        impl.sw_sweeps(spins, eu, ev, w, 0.8, sweeps, state)
        return spins

    t_py, spins_py = _timeit(run, pyref, repeat=1)
    rows = [("Swendsen-Wang (200 spins x 300 sweeps)", t_py, None, None)]
    if HAVE_CORE:
        t_c, spins_c = _timeit(run, _core)
        assert np.array_equal(spins_py, spins_c), "backend mismatch"
        rows[-1] = (rows[-1][0], t_py, t_c, None)
    return rows


def bench_gray():
    rng = np.random.default_rng(4)
    n = 18
    edges = [(i, i + 1, float(rng.uniform(0.1, 1.0))) for i in range(n - 1)]
    edges += [(0, 9, 0.4), (3, 14, 0.7)]
    eu = np.array([e[0] for e in edges], dtype=np.int32)
    ev = np.array([e[1] for e in edges], dtype=np.int32)
    w = np.array([e[2] for e in edges])
    t_py, v_py = _timeit(pyref.gray_log_partition, n, eu, ev, w, repeat=1)
    rows = [("exact enumeration (2^18 states)", t_py, None, None)]
    if HAVE_CORE:
        t_c, v_c = _timeit(_core.gray_log_partition, n, eu, ev, w)
        assert abs(v_py - v_c) < 1e-9
        rows[-1] = (rows[-1][0], t_py, t_c, None)
    return rows


def bench_anneal():
    rng = np.random.default_rng(5)
    n = 64
    eu = np.arange(n - 1, dtype=np.int32)
    ev = np.arange(1, n, dtype=np.int32)
    w = rng.uniform(0.5, 2.5, n - 1)
    ladder = np.linspace(0, 1, 201)
    samples = np.full(200, 8, dtype=np.int64)
    state = stream_state(6, 0, 2)
    t_py, out_py = _timeit(pyref.anneal_pass, n, eu, ev, w, ladder, samples, 2, state, repeat=1)
    rows = [("annealing pass (200 rungs x 10 sweeps)", t_py, None, None)]
    if HAVE_CORE:
        t_c, out_c = _timeit(_core.anneal_pass, n, eu, ev, w, ladder, samples, 2, state)
        assert np.array_equal(out_py[0], out_c[0]), "backend mismatch"
        rows[-1] = (rows[-1][0], t_py, t_c, None)
    return rows


def main():
    rows = []
    for bench in (bench_walk, bench_sw, bench_gray, bench_anneal):
        rows.extend(bench())
    width = max(len(r[0]) for r in rows) + 2
    print(f"{'kernel':<{width}}{'python':>10}{'compiled':>10}{'speedup':>9}")
    for name, t_py, t_c, _ in rows:
        if t_c is None:
            print(f"{name:<{width}}{t_py:>9.3f}s {'-':>9}{'-':>9}")
        else:
            print(f"{name:<{width}}{t_py:>9.3f}s {t_c:>8.4f}s {t_py / t_c:>8.1f}x")
    if not HAVE_CORE:
        print("\ncompiled backend unavailable; showing pure-Python times only")


if __name__ == "__main__":
    main()
