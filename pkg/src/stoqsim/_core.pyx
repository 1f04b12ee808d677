# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot loops.

Mirrors stoqsim.kernels.pyref operation-for-operation, including random draw
order and float accumulation order, so both backends are bit-identical.  Any
change here must be made in pyref.py as well.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, floor, fabs, lgamma
from libc.stdint cimport uint64_t, int64_t, int32_t, int8_t

NAME = "compiled"

cdef uint64_t MASK64 = <uint64_t>0xFFFFFFFFFFFFFFFF
cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = <uint64_t>0x94D049BB133111EB
cdef uint64_t STREAM_MULT = <uint64_t>0xA24BAED4963EE407
cdef uint64_t SALT_MULT = <uint64_t>0x9FB21C651E98DF25
cdef double INV53 = 1.0 / 9007199254740992.0  # 2^-53


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _stream_state(uint64_t seed, uint64_t stream, uint64_t salt) nogil:
    cdef uint64_t s = _mix64(seed + GOLDEN)
    s ^= _mix64(stream * STREAM_MULT + salt * SALT_MULT + GOLDEN)
    return s


cdef inline uint64_t _next_u64(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    return _mix64(state[0])


cdef inline double _uniform(uint64_t* state) nogil:
    return <double>(_next_u64(state) >> 11) * INV53


cdef int64_t _poisson(uint64_t* state, double mean) nogil:
    cdef double p, cdf, u, b, a, inv_alpha, v_r, log_mean, v, us, k
    cdef int64_t ki
    if mean <= 0.0:
        return 0
    if mean < 10.0:
        # CDF inversion by sequential search
        p = exp(-mean)
        cdf = p
        ki = 0
        u = _uniform(state)
        while u > cdf and ki < 10000:
            ki += 1
            p = p * (mean / ki)
            cdf = cdf + p
        return ki
    # Hormann PTRS
    b = 0.931 + 2.53 * sqrt(mean)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_mean = log(mean)
    while True:
        u = _uniform(state) - 0.5
        v = _uniform(state)
        us = 0.5 - fabs(u)
        k = floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= v_r:
            return <int64_t>k
        if k < 0.0 or (us < 0.013 and v > us):
            continue
        if log(v) + log(inv_alpha) - log(a / (us * us) + b) <= k * log_mean - mean - lgamma(k + 1.0):
            return <int64_t>k


def stream_state_check(seed, stream, salt):
    """Initial stream state (parity hook for tests)."""
    return int(_stream_state(<uint64_t>seed, <uint64_t>stream, <uint64_t>salt))


def poisson_draws(seed, stream, salt, means):
    """Sequential Poisson draws from one stream (parity/distribution tests)."""
    cdef double[::1] m = np.ascontiguousarray(means, dtype=np.float64)
    out = np.empty(m.shape[0], dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef uint64_t state = _stream_state(<uint64_t>seed, <uint64_t>stream, <uint64_t>salt)
    cdef Py_ssize_t i
    with nogil:
        for i in range(m.shape[0]):
            o[i] = _poisson(&state, m[i])
    return out


def uniform_draws(seed, stream, salt, count):
    cdef Py_ssize_t n = count
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t state = _stream_state(<uint64_t>seed, <uint64_t>stream, <uint64_t>salt)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = _uniform(&state)
    return out


cdef inline void _insort(int32_t* arr, int n) nogil:
    cdef int i, j
    cdef int32_t key
    for i in range(1, n):
        key = arr[i]
        j = i - 1
        while j >= 0 and arr[j] > key:
            arr[j + 1] = arr[j]
            j -= 1
        arr[j + 1] = key


cdef inline int _collect_sorted(int64_t* cnt, int dim, int32_t* occ, int n) nogil:
    # Rebuild the occupied list in ascending order.  Small lists are sorted in
    # place; large ones are rebuilt by a full scan (same result, bounded cost).
    cdef int i, m
    if n <= 48:
        _insort(occ, n)
        return n
    m = 0
    for i in range(dim):
        if cnt[i] != 0:
            occ[m] = i
            m += 1
    return m


def walk_trajectories(indptr, indices, pvals, x0, steps, seed, salt, lo, hi):
    """Population totals of unconstrained branching walks; see pyref."""
    cdef int32_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef double[::1] pv = np.ascontiguousarray(pvals, dtype=np.float64)
    cdef int dim = ip.shape[0] - 1
    cdef int L = steps
    cdef int64_t t_lo = lo, t_hi = hi
    cdef uint64_t useed = <uint64_t>seed, usalt = <uint64_t>salt
    cdef int start = x0

    out = np.zeros((t_hi - t_lo, L + 1), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    cnt_a = np.zeros(dim, dtype=np.int64)
    cnt_b = np.zeros(dim, dtype=np.int64)
    occ_a = np.zeros(dim, dtype=np.int32)
    occ_b = np.zeros(dim, dtype=np.int32)
    cdef int64_t[::1] ca = cnt_a
    cdef int64_t[::1] cb = cnt_b
    cdef int32_t[::1] oa = occ_a
    cdef int32_t[::1] ob = occ_b

    cdef int64_t trial, total, c, k
    cdef int na, nb, i, t, x, y
    cdef Py_ssize_t idx
    cdef uint64_t state
    cdef int64_t* cur
    cdef int64_t* nxt
    cdef int32_t* curo
    cdef int32_t* nxto
    cdef int64_t* tmpc
    cdef int32_t* tmpo

    with nogil:
        for trial in range(t_lo, t_hi):
            state = _stream_state(useed, <uint64_t>trial, usalt)
            cur = &ca[0]; nxt = &cb[0]
            curo = &oa[0]; nxto = &ob[0]
            cur[start] = 1
            curo[0] = start
            na = 1
            o[trial - t_lo, 0] = 1
            for t in range(1, L + 1):
                nb = 0
                total = 0
                for i in range(na):
                    x = curo[i]
                    c = cur[x]
                    cur[x] = 0
                    for idx in range(ip[x], ip[x + 1]):
                        k = _poisson(&state, c * pv[idx])
                        if k != 0:
                            y = ix[idx]
                            if nxt[y] == 0:
                                nxto[nb] = y
                                nb += 1
                            nxt[y] += k
                            total += k
                nb = _collect_sorted(nxt, dim, nxto, nb)
                tmpc = cur; cur = nxt; nxt = tmpc
                tmpo = curo; curo = nxto; nxto = tmpo
                na = nb
                o[trial - t_lo, t] = total
                if total == 0:
                    break
            for i in range(na):
                cur[curo[i]] = 0
    return out


def walk_verdicts(indptr, indices, pvals, x0, steps, gamma_max, enforce_max, seed, salt, lo, hi):
    """Verification walks; see pyref for the return contract."""
    cdef int32_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef double[::1] pv = np.ascontiguousarray(pvals, dtype=np.float64)
    cdef int dim = ip.shape[0] - 1
    cdef int L = steps
    cdef int64_t gmax = gamma_max
    cdef bint do_max = enforce_max
    cdef int64_t t_lo = lo, t_hi = hi
    cdef uint64_t useed = <uint64_t>seed, usalt = <uint64_t>salt
    cdef int start = x0

    verdicts = np.empty(t_hi - t_lo, dtype=np.int8)
    reject_steps = np.full(t_hi - t_lo, -1, dtype=np.int32)
    alive_arr = np.zeros(L + 1, dtype=np.int64)
    gamma_sum_arr = np.zeros(L + 1, dtype=np.int64)
    cdef int8_t[::1] vout = verdicts
    cdef int32_t[::1] sout = reject_steps
    cdef int64_t[::1] alive = alive_arr
    cdef int64_t[::1] gsum = gamma_sum_arr
    cnt_a = np.zeros(dim, dtype=np.int64)
    cnt_b = np.zeros(dim, dtype=np.int64)
    occ_a = np.zeros(dim, dtype=np.int32)
    occ_b = np.zeros(dim, dtype=np.int32)
    cdef int64_t[::1] ca = cnt_a
    cdef int64_t[::1] cb = cnt_b
    cdef int32_t[::1] oa = occ_a
    cdef int32_t[::1] ob = occ_b

    cdef int64_t trial, total, c, k
    cdef int na, nb, i, t, x, y, verdict, step_out
    cdef Py_ssize_t idx
    cdef uint64_t state
    cdef int64_t* cur
    cdef int64_t* nxt
    cdef int32_t* curo
    cdef int32_t* nxto
    cdef int64_t* tmpc
    cdef int32_t* tmpo

    with nogil:
        for trial in range(t_lo, t_hi):
            state = _stream_state(useed, <uint64_t>trial, usalt)
            cur = &ca[0]; nxt = &cb[0]
            curo = &oa[0]; nxto = &ob[0]
            cur[start] = 1
            curo[0] = start
            na = 1
            total = 1
            verdict = 0
            step_out = -1
            alive[0] += 1
            gsum[0] += 1
            if do_max and total > gmax:
                verdict = 2
                step_out = 0
            else:
                for t in range(1, L + 1):
                    nb = 0
                    total = 0
                    for i in range(na):
                        x = curo[i]
                        c = cur[x]
                        cur[x] = 0
                        for idx in range(ip[x], ip[x + 1]):
                            k = _poisson(&state, c * pv[idx])
                            if k != 0:
                                y = ix[idx]
                                if nxt[y] == 0:
                                    nxto[nb] = y
                                    nb += 1
                                nxt[y] += k
                                total += k
                    nb = _collect_sorted(nxt, dim, nxto, nb)
                    tmpc = cur; cur = nxt; nxt = tmpc
                    tmpo = curo; curo = nxto; nxto = tmpo
                    na = nb
                    alive[t] += 1
                    gsum[t] += total
                    if do_max and total > gmax:
                        verdict = 2
                        step_out = t
                        break
                    if total == 0:
                        verdict = 1
                        step_out = t
                        break
                else:
                    if total >= 1:
                        verdict = 0
                    else:
                        verdict = 1
                        step_out = L
            for i in range(na):
                cur[curo[i]] = 0
            vout[trial - t_lo] = <int8_t>verdict
            sout[trial - t_lo] = step_out
    return verdicts, reject_steps, alive_arr, gamma_sum_arr


cdef inline int32_t _find_root(int32_t* parent, int32_t x) nogil:
    cdef int32_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef void _sw_sweep_once(int8_t* spins, int n, int32_t* eu, int32_t* ev, int m,
                         double* act, int32_t* parent, int8_t* value,
                         uint64_t* state) nogil:
    cdef int e, x
    cdef int32_t u, v, ru, rv
    for x in range(n):
        parent[x] = x
    for e in range(m):
        u = eu[e]
        v = ev[e]
        if spins[u] == spins[v]:
            if _uniform(state) < act[e]:
                ru = _find_root(parent, u)
                rv = _find_root(parent, v)
                if ru != rv:
                    if ru < rv:
                        parent[rv] = ru
                    else:
                        parent[ru] = rv
    for x in range(n):
        if _find_root(parent, x) == x:
            value[x] = 1 if _uniform(state) < 0.5 else -1
    for x in range(n):
        spins[x] = value[_find_root(parent, x)]


def sw_sweeps(spins, eu, ev, weights, beta_scale, nsweeps, state):
    """Run SW sweeps in place at scaled couplings; returns the new RNG state."""
    cdef int8_t[::1] sp = spins
    cdef int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = sp.shape[0]
    cdef int m = u.shape[0]
    cdef double b = beta_scale
    cdef int sweeps = nsweeps
    cdef uint64_t st = <uint64_t>state
    act_arr = np.empty(m, dtype=np.float64)
    parent_arr = np.empty(n, dtype=np.int32)
    value_arr = np.empty(n, dtype=np.int8)
    cdef double[::1] act = act_arr
    cdef int32_t[::1] parent = parent_arr
    cdef int8_t[::1] value = value_arr
    cdef int e, s
    with nogil:
        for e in range(m):
            act[e] = 1.0 - exp(-2.0 * b * w[e])
        for s in range(sweeps):
            _sw_sweep_once(&sp[0], n, &u[0] if m else NULL, &v[0] if m else NULL,
                           m, &act[0] if m else NULL, &parent[0], &value[0], &st)
    return int(st)


cdef inline double _ising_energy(int8_t* spins, int32_t* eu, int32_t* ev,
                                 double* w, int m) nogil:
    cdef double total = 0.0
    cdef int e
    for e in range(m):
        total += w[e] * spins[eu[e]] * spins[ev[e]]
    return total


def anneal_pass(n_spins, eu, ev, weights, ladder, samples_per_rung, burn, state):
    """One annealing pass along the coupling-scale ladder; see pyref."""
    cdef int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] lad = np.ascontiguousarray(ladder, dtype=np.float64)
    cdef int64_t[::1] spr = np.ascontiguousarray(samples_per_rung, dtype=np.int64)
    cdef int n = n_spins
    cdef int m = u.shape[0]
    cdef int nburn = burn
    cdef int n_rungs = lad.shape[0] - 1
    cdef uint64_t st = <uint64_t>state

    log_r_arr = np.empty(n_rungs, dtype=np.float64)
    ess_arr = np.empty(n_rungs, dtype=np.float64)
    wvar_arr = np.empty(n_rungs, dtype=np.float64)
    cdef double[::1] log_r = log_r_arr
    cdef double[::1] ess = ess_arr
    cdef double[::1] wvar = wvar_arr

    spins_arr = np.empty(n, dtype=np.int8)
    parent_arr = np.empty(n, dtype=np.int32)
    value_arr = np.empty(n, dtype=np.int8)
    act_arr = np.empty(m, dtype=np.float64)
    cdef int8_t[::1] spins = spins_arr
    cdef int32_t[::1] parent = parent_arr
    cdef int8_t[::1] value = value_arr
    cdef double[::1] act = act_arr

    cdef int64_t max_s = 0
    cdef int k
    for k in range(n_rungs):
        if spr[k] > max_s:
            max_s = spr[k]
    wvals_arr = np.empty(max_s if max_s > 0 else 1, dtype=np.float64)
    cdef double[::1] wvals = wvals_arr

    cdef double b, db, mx, se, se2, e_w, mean, acc, d
    cdef int x, e, s
    cdef int64_t s_k

    with nogil:
        for x in range(n):
            spins[x] = 1 if _uniform(&st) < 0.5 else -1
        for k in range(n_rungs):
            b = lad[k]
            db = lad[k + 1] - b
            for e in range(m):
                act[e] = 1.0 - exp(-2.0 * b * w[e])
            for s in range(nburn):
                _sw_sweep_once(&spins[0], n, &u[0] if m else NULL, &v[0] if m else NULL,
                               m, &act[0] if m else NULL, &parent[0], &value[0], &st)
            s_k = spr[k]
            for s in range(s_k):
                _sw_sweep_once(&spins[0], n, &u[0] if m else NULL, &v[0] if m else NULL,
                               m, &act[0] if m else NULL, &parent[0], &value[0], &st)
                wvals[s] = db * _ising_energy(&spins[0], &u[0] if m else NULL,
                                              &v[0] if m else NULL, &w[0] if m else NULL, m)
            mx = wvals[0]
            for s in range(1, s_k):
                if wvals[s] > mx:
                    mx = wvals[s]
            se = 0.0
            se2 = 0.0
            for s in range(s_k):
                e_w = exp(wvals[s] - mx)
                se += e_w
                se2 += e_w * e_w
            log_r[k] = mx + log(se / s_k)
            ess[k] = se * se / se2
            mean = 0.0
            for s in range(s_k):
                mean += wvals[s]
            mean /= s_k
            acc = 0.0
            for s in range(s_k):
                d = wvals[s] - mean
                acc += d * d
            wvar[k] = acc / s_k
    return log_r_arr, ess_arr, wvar_arr, int(st)


def gray_log_partition(n_spins, eu, ev, weights):
    """Exact log partition sum by Gray-code enumeration (N <= 24)."""
    cdef int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int n = n_spins
    cdef int m = u.shape[0]

    # adjacency in CSR form: for each vertex the (other endpoint, weight) pairs
    deg = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] adj_ptr = deg
    cdef int e
    for e in range(m):
        adj_ptr[u[e] + 1] += 1
        adj_ptr[v[e] + 1] += 1
    for e in range(n):
        adj_ptr[e + 1] += adj_ptr[e]
    adj_v_arr = np.empty(m * 2 if m else 1, dtype=np.int32)
    adj_w_arr = np.empty(m * 2 if m else 1, dtype=np.float64)
    fill = np.array(adj_ptr[:n]).copy()
    cdef int64_t[::1] pos = fill
    cdef int32_t[::1] adj_v = adj_v_arr
    cdef double[::1] adj_w = adj_w_arr
    for e in range(m):
        adj_v[pos[u[e]]] = v[e]
        adj_w[pos[u[e]]] = w[e]
        pos[u[e]] += 1
        adj_v[pos[v[e]]] = u[e]
        adj_w[pos[v[e]]] = w[e]
        pos[v[e]] += 1

    sig_arr = np.ones(n, dtype=np.int8)
    cdef int8_t[::1] sig = sig_arr
    cdef double energy = 0.0
    cdef double mx, ssum, c
    cdef uint64_t i, total
    cdef int j
    cdef int64_t a
    for e in range(m):
        energy += w[e]
    mx = energy
    ssum = 1.0
    total = (<uint64_t>1) << n
    with nogil:
        for i in range(1, total):
            j = 0
            while not (i >> j) & 1:
                j += 1
            c = 0.0
            for a in range(adj_ptr[j], adj_ptr[j + 1]):
                c += adj_w[a] * sig[adj_v[a]]
            c *= sig[j]
            sig[j] = -sig[j]
            energy = energy - 2.0 * c
            if energy <= mx:
                ssum += exp(energy - mx)
            else:
                ssum = ssum * exp(mx - energy) + 1.0
                mx = energy
    return mx + log(ssum)
