"""Exact dense oracle for n <= 12 qubits.

Everything stochastic in this package is tested against these routines:
dense builds, ground energies and non-negative ground states, partition
values, the walk-population moment formulas, and the steady-state / good-set
construction used to pick a start string.
"""

from collections import namedtuple

import numpy as np

from .bits import bits_to_index, index_to_bits, lex_sorted_states
from .errors import DiagnosticError, OrthogonalGuideError, SizeError
from .guiding import amplitude_vector

ORACLE_MAX_QUBITS = 12

SpectralSummary = namedtuple("SpectralSummary", ["eigenvalues", "ground_energy"])
PartitionValue = namedtuple("PartitionValue", ["value", "log_value"])
PiGoodSet = namedtuple("PiGoodSet", ["pi", "good_states", "pi_good_mass", "overlap"])


def _check_size(h):
    if h.n > ORACLE_MAX_QUBITS:
        raise SizeError(f"oracle routines support n <= {ORACLE_MAX_QUBITS}, got n={h.n}")


def build_dense(h):
    """Dense 2^n x 2^n matrix of the Hamiltonian (real symmetric)."""
    _check_size(h)
    n = h.n
    dim = 1 << n
    out = np.zeros((dim, dim))
    for term in h.terms:
        support = term.support
        others = [u for u in range(n) if u not in support]
        # state indices of all assignments of the non-support qubits
        rest = np.zeros(1 << len(others), dtype=np.int64)
        for j, u in enumerate(others):
            idx = np.arange(1 << len(others))
            rest |= ((idx >> j) & 1) << u
        offsets = np.zeros(1 << len(support), dtype=np.int64)
        for j, u in enumerate(support):
            idx = np.arange(1 << len(support))
            offsets |= ((idx >> j) & 1) << u
        block = term.block
        for a in range(block.shape[0]):
            xs = rest + offsets[a]
            for b in range(block.shape[1]):
                val = block[a, b]
                if val == 0.0:
                    continue
                out[xs, rest + offsets[b]] += val
    asym = np.max(np.abs(out - out.T))
    if asym > 1e-10:
        raise DiagnosticError(f"dense build lost symmetry by {asym:.2e}")
    return out


def spectrum(h):
    """Eigenvalues (ascending) and ground energy."""
    w = np.linalg.eigvalsh(build_dense(h))
    return SpectralSummary(eigenvalues=w, ground_energy=float(w[0]))


def ground_energy_exact(h):
    return spectrum(h).ground_energy


def ground_state_exact(h):
    """Ground energy plus a normalized non-negative ground eigenvector.

    For a stoquastic matrix, |v| of any ground eigenvector is again a ground
    eigenvector (Perron-Frobenius), so the absolute value is taken and
    renormalized.
    """
    dense = build_dense(h)
    w, vecs = np.linalg.eigh(dense)
    v = np.abs(vecs[:, 0])
    v = v / np.linalg.norm(v)
    return float(w[0]), v


def partition_exact(h):
    """Trace of e^{-H} via the spectrum, overflow-guarded in log space."""
    w = spectrum(h).eigenvalues
    neg = -w
    m = float(np.max(neg))
    log_z = m + float(np.log(np.sum(np.exp(neg - m))))
    return PartitionValue(value=float(np.exp(log_z)), log_value=log_z)


def green_dense(h, beta, lambda_m):
    """Dense G = I - beta (H - lambda_M I)."""
    dense = build_dense(h)
    dim = dense.shape[0]
    return np.eye(dim) - beta * (dense - lambda_m * np.eye(dim))


def green_norm(h, beta, lambda_m):
    """Largest eigenvalue of G, equal to 1 - beta (lambda - lambda_M)."""
    g = green_dense(h, beta, lambda_m)
    return float(np.max(np.linalg.eigvalsh(g)))


def expected_population_exact(h, params, lambda_m, guide, x_m, t):
    """Mean total population after t steps: <x_M| G^t |phi> / phi(x_M).

    `guide` must already be regularized; `x_m` is a bit string.
    """
    _check_size(h)
    g = green_dense(h, params.beta, lambda_m)
    phi = amplitude_vector(guide, h.n)
    ix = bits_to_index(x_m)
    vec = phi.copy()
    for _ in range(int(t)):
        vec = g @ vec
    return float(vec[ix] / phi[ix])


def second_moment_exact(h, params, lambda_m, guide, x_m, L):
    """Second moment of the final population from the two-sided propagator sum."""
    _check_size(h)
    g = green_dense(h, params.beta, lambda_m)
    phi = amplitude_vector(guide, h.n)
    ix = bits_to_index(x_m)
    L = int(L)
    # a[s] = G^s e_{x_M} (row of G^s from x_M; G is symmetric),
    # b[j] = G^j phi
    a = [None] * (L + 1)
    b = [None] * (L + 1)
    e = np.zeros(phi.shape[0])
    e[ix] = 1.0
    a[0] = e
    b[0] = phi.copy()
    for s in range(1, L + 1):
        a[s] = g @ a[s - 1]
        b[s] = g @ b[s - 1]
    total = 0.0
    for s in range(L + 1):
        total += float(np.sum(a[s] * b[L - s] ** 2 / phi))
    return total / phi[ix]


def pair_population_exact(h, params, lambda_m, guide, x_m, t, s):
    """Mean of the look-ahead population variable: walkers at step t propagated
    s further steps in expectation.  Used to verify the proof recursion
    E[t, s] = E[t-1, s+1] by evaluating both sides independently."""
    _check_size(h)
    g = green_dense(h, params.beta, lambda_m)
    phi = amplitude_vector(guide, h.n)
    ix = bits_to_index(x_m)
    # P(x, y) = phi(y)/phi(x) G(x, y); mean occupation row after t steps is
    # e_{x_M}^T P^t, and the look-ahead applies P^s then sums.
    p = g * (phi[None, :] / phi[:, None])
    row = np.zeros(phi.shape[0])
    row[ix] = 1.0
    for _ in range(int(t)):
        row = row @ p
    for _ in range(int(s)):
        row = row @ p
    return float(np.sum(row))


def pi_and_good_set(h, params, guide):
    """Steady-state distribution pi and the set of start strings whose
    ground-to-guide ratio is at least half the overlap.

    Returns a PiGoodSet with pi over integer states, the good states as a
    sorted array, and the pi-mass of the good set (checked >= 1/2).
    """
    _check_size(h)
    _, psi = ground_state_exact(h)
    phi = amplitude_vector(guide, h.n)
    overlap = float(psi @ phi)
    if overlap <= 1e-300:
        raise OrthogonalGuideError("guide state is orthogonal to the ground state")
    pi = psi * phi / overlap
    # zero guide amplitude: infinite ratio when psi > 0 (in the set, but with
    # zero pi mass), vacuous otherwise
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(phi > 0.0, psi / np.where(phi > 0.0, phi, 1.0), np.where(psi > 0.0, np.inf, 0.0))
    good = np.flatnonzero(ratio >= overlap / 2.0)
    mass = float(np.sum(pi[good]))
    if mass < 0.5 - 1e-9:
        raise DiagnosticError(
            f"good-set mass {mass:.6f} fell below 1/2; guide violates the "
            "pointwise-correlation assumption"
        )
    return PiGoodSet(pi=pi, good_states=good, pi_good_mass=mass, overlap=overlap)


def best_start_state(h, params, guide):
    """argmax of pi over the good set, ties broken lexicographically."""
    res = pi_and_good_set(h, params, guide)
    good = set(int(s) for s in res.good_states)
    best = None
    best_pi = -1.0
    for ix in lex_sorted_states(h.n):
        if ix in good and res.pi[ix] > best_pi + 1e-15:
            best = ix
            best_pi = res.pi[ix]
    return index_to_bits(best, h.n)
