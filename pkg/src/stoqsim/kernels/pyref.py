"""Pure-Python kernel implementations.

These are the reference semantics for the hot loops.  The compiled extension
(stoqsim._core) mirrors them operation-for-operation, including the order in
which random draws are consumed, so the two backends produce bit-identical
results.  Keep any change here in lockstep with _core.pyx.
"""

import math

import numpy as np

from ..rng import Stream

NAME = "python"


def walk_trajectories(indptr, indices, pvals, x0, steps, seed, salt, lo, hi):
    """Population totals of unconstrained branching walks.

    Returns an int64 array of shape (hi - lo, steps + 1); row t holds the
    total population of trial `lo + t` at steps 0..steps.  Trial i draws from
    stream (seed, i, salt).
    """
    out = np.zeros((hi - lo, steps + 1), dtype=np.int64)
    for trial in range(lo, hi):
        st = Stream(seed, trial, salt)
        pop = {int(x0): 1}
        out[trial - lo, 0] = 1
        for t in range(1, steps + 1):
            nxt = {}
            for x in sorted(pop):
                cnt = pop[x]
                for idx in range(indptr[x], indptr[x + 1]):
                    k = st.poisson(cnt * pvals[idx])
                    if k:
                        y = int(indices[idx])
                        nxt[y] = nxt.get(y, 0) + k
            pop = nxt
            total = sum(pop.values())
            out[trial - lo, t] = total
            if total == 0:
                break  # absorbing; remaining entries stay 0
    return out


VERDICT_ACCEPT = 0
VERDICT_EXTINCT = 1
VERDICT_OVERFLOW = 2


def walk_verdicts(indptr, indices, pvals, x0, steps, gamma_max, enforce_max, seed, salt, lo, hi):
    """Run verification walks.

    Returns (verdicts, reject_steps, alive, gamma_sum): verdict codes are
    0 accept, 1 reject (extinct), 2 reject (overflow at the recorded step);
    reject_steps is -1 for accepted trials; alive[t] counts trials that
    executed step t and gamma_sum[t] totals their populations there.
    """
    verdicts = np.empty(hi - lo, dtype=np.int8)
    reject_steps = np.full(hi - lo, -1, dtype=np.int32)
    alive = np.zeros(steps + 1, dtype=np.int64)
    gamma_sum = np.zeros(steps + 1, dtype=np.int64)
    for trial in range(lo, hi):
        st = Stream(seed, trial, salt)
        pop = {int(x0): 1}
        total = 1
        verdict = VERDICT_ACCEPT
        step_out = -1
        alive[0] += 1
        gamma_sum[0] += 1
        if enforce_max and total > gamma_max:
            verdict, step_out = VERDICT_OVERFLOW, 0
        else:
            for t in range(1, steps + 1):
                nxt = {}
                for x in sorted(pop):
                    cnt = pop[x]
                    for idx in range(indptr[x], indptr[x + 1]):
                        k = st.poisson(cnt * pvals[idx])
                        if k:
                            y = int(indices[idx])
                            nxt[y] = nxt.get(y, 0) + k
                pop = nxt
                total = sum(pop.values())
                alive[t] += 1
                gamma_sum[t] += total
                if enforce_max and total > gamma_max:
                    verdict, step_out = VERDICT_OVERFLOW, t
                    break
                if total == 0:
                    verdict, step_out = VERDICT_EXTINCT, t
                    break
            else:
                verdict = VERDICT_ACCEPT if total >= 1 else VERDICT_EXTINCT
                if verdict == VERDICT_EXTINCT:
                    step_out = steps
        verdicts[trial - lo] = verdict
        reject_steps[trial - lo] = step_out
    return verdicts, reject_steps, alive, gamma_sum


def _find_root(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:  # path compression
        parent[x], x = root, parent[x]
    return root


def _sw_sweep_once(spins, eu, ev, act, stream):
    """One Swendsen-Wang update; draw order: aligned edges, then cluster roots."""
    n = spins.shape[0]
    parent = list(range(n))
    for e in range(eu.shape[0]):
        u = eu[e]
        v = ev[e]
        if spins[u] == spins[v]:
            if stream.uniform() < act[e]:
                ru = _find_root(parent, u)
                rv = _find_root(parent, v)
                if ru != rv:
                    if ru < rv:
                        parent[rv] = ru
                    else:
                        parent[ru] = rv
    value = np.empty(n, dtype=np.int8)
    for x in range(n):
        if _find_root(parent, x) == x:
            value[x] = 1 if stream.uniform() < 0.5 else -1
    for x in range(n):
        spins[x] = value[_find_root(parent, x)]


def _activation_probs(weights, beta_scale):
    # math.exp (libm) per element, matching the compiled backend bit-for-bit;
    # np.exp may differ in the last ulp.
    return [1.0 - math.exp(-2.0 * beta_scale * float(w)) for w in weights]


def sw_sweeps(spins, eu, ev, weights, beta_scale, nsweeps, state):
    """Run SW sweeps in place at scaled couplings; returns the new RNG state."""
    stream = Stream(0)
    stream.state = int(state)
    act = _activation_probs(weights, beta_scale)
    for _ in range(nsweeps):
        _sw_sweep_once(spins, eu, ev, act, stream)
    return stream.state


def _ising_energy(spins, eu, ev, weights):
    total = 0.0
    for e in range(eu.shape[0]):
        total += weights[e] * spins[eu[e]] * spins[ev[e]]
    return total


def anneal_pass(n_spins, eu, ev, weights, ladder, samples_per_rung, burn, state):
    """One annealing pass along the coupling-scale ladder.

    Starts from a uniform configuration (the exact scale-0 distribution) and,
    for each rung k, equilibrates with `burn` sweeps then collects
    samples_per_rung[k] samples of the rung's log importance weight
    (b_{k+1} - b_k) * E.  Returns per-rung (log ratio estimate, effective
    sample size, weight variance) and the advanced RNG state.
    """
    stream = Stream(0)
    stream.state = int(state)
    spins = np.empty(n_spins, dtype=np.int8)
    for x in range(n_spins):
        spins[x] = 1 if stream.uniform() < 0.5 else -1
    n_rungs = len(ladder) - 1
    log_r = np.empty(n_rungs)
    ess = np.empty(n_rungs)
    wvar = np.empty(n_rungs)
    for k in range(n_rungs):
        b = ladder[k]
        db = ladder[k + 1] - b
        act = _activation_probs(weights, b)
        for _ in range(burn):
            _sw_sweep_once(spins, eu, ev, act, stream)
        s_k = int(samples_per_rung[k])
        wvals = [0.0] * s_k
        for s in range(s_k):
            _sw_sweep_once(spins, eu, ev, act, stream)
            wvals[s] = db * _ising_energy(spins, eu, ev, weights)
        # sequential accumulation, same order as the compiled backend
        m = wvals[0]
        for s in range(1, s_k):
            if wvals[s] > m:
                m = wvals[s]
        se = 0.0
        se2 = 0.0
        for s in range(s_k):
            e = math.exp(wvals[s] - m)
            se += e
            se2 += e * e
        log_r[k] = m + math.log(se / s_k)
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
    return log_r, ess, wvar, stream.state


def gray_log_partition(n_spins, eu, ev, weights):
    """log sum over all 2^N spin configurations of exp(sum_e w sigma sigma).

    The compiled backend walks a Gray code; this fallback enumerates in
    vectorized blocks.  Both are exact up to float summation order.
    """
    n_edges = eu.shape[0]
    total_states = 1 << n_spins
    block = min(total_states, 1 << 16)
    eu = np.asarray(eu)
    ev = np.asarray(ev)
    weights = np.asarray(weights)
    block_logs = []
    for start in range(0, total_states, block):
        idx = np.arange(start, min(start + block, total_states), dtype=np.int64)
        sigma = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n_spins)[None, :]) & 1)
        if n_edges:
            energies = (sigma[:, eu] * sigma[:, ev]) @ weights
        else:
            energies = np.zeros(idx.shape[0])
        m = float(np.max(energies))
        block_logs.append(m + math.log(float(np.sum(np.exp(energies - m)))))
    block_logs = np.array(block_logs)
    m = float(np.max(block_logs))
    return m + math.log(float(np.sum(np.exp(block_logs - m))))
