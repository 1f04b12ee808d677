"""Symmetric Trotter splitting error control and the quantum-to-classical
mapping of the ferromagnetic transverse-field Ising model.

The splitting error is governed by a third-order remainder operator D with
spectral norm at most 12 rho^3 (rho = spread(A) + spread(B)) whenever the
step satisfies t <= 1/(2 rho); the step count r is chosen so the resulting
eigenvalue shift stays below the target multiplicative error.  The mapped
model has r layers of the n-spin coupling graph plus periodic inter-layer
bonds of strength -log(tanh(t h_u))/2, with the layer prefactor carried
exactly in log form.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeError, NotStoquasticError, ValidationError
from .ising import ClassicalIsingModel

logger = logging.getLogger(__name__)

TROTTER_ERROR_MAX_DIM = 256
TRACE_MAX_QUBITS = 10


def spectral_spread_bound(tim):
    """Triangle-inequality bound on spread(A) + spread(B): 2(sum J + sum h).

    Any upper bound on the spread keeps the step-count choice sound, and this
    one is computable at any size (and tighter than n^2 max-interaction).
    """
    if not tim.is_ferromagnetic or not tim.is_stoquastic:
        raise NotStoquasticError("spread bound assumes J_uv >= 0 and h_u >= 0")
    coupling_sum = sum(j for _, _, j in tim.couplings)
    return 2.0 * (coupling_sum + float(np.sum(tim.fields)))


def spectral_spread_exact(tim):
    """Exact spread(A) + spread(B) for tests (n <= 12).

    A is diagonal, so its spread comes from enumerating the classical coupling
    energies; B is a sum of commuting single-qubit flips with spectrum
    {sum of +-h_u}, so its spread is exactly 2 sum h_u.
    """
    if tim.n > 12:
        raise SizeError("exact spread enumeration supports n <= 12")
    dim = 1 << tim.n
    bits = (np.arange(dim)[:, None] >> np.arange(tim.n)[None, :]) & 1
    sig = 1.0 - 2.0 * bits
    ea = np.zeros(dim)
    for u, v, j in tim.couplings:
        ea += j * sig[:, u] * sig[:, v]
    rho_a = float(np.max(ea) - np.min(ea))
    rho_b = 2.0 * float(np.sum(np.abs(tim.fields)))
    return rho_a + rho_b


@dataclass(frozen=True)
class TrotterPlan:
    """Step count r, step t = 1/r, the spread bound used, and the error target.

    plan_trotter enforces the error-bound preconditions; direct construction
    permits arbitrary r >= 1 for mapping-identity experiments.
    """

    r: int
    t: float
    rho: float
    delta: float

    def __post_init__(self):
        if self.r < 1:
            raise ValidationError("step count r must be >= 1")

    @property
    def eigenvalue_shift_bound(self):
        """Weyl bound on each eigenvalue shift: 12 rho^3 / r^2."""
        return 12.0 * self.rho**3 / self.r**2

    @property
    def satisfies_error_bound(self):
        return self.r >= 2.0 * self.rho and self.eigenvalue_shift_bound <= self.delta + 1e-12

    @classmethod
    def from_r(cls, tim, r, delta=1.0):
        return cls(r=int(r), t=1.0 / int(r), rho=spectral_spread_bound(tim), delta=delta)


def plan_trotter(tim, delta):
    """Choose r = ceil(max(2 rho, sqrt(12 rho^3 / delta))) for target delta."""
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    rho = spectral_spread_bound(tim)
    if rho == 0.0:
        return TrotterPlan(r=1, t=1.0, rho=0.0, delta=delta)
    r = max(1, math.ceil(max(2.0 * rho, math.sqrt(12.0 * rho**3 / delta))))
    plan = TrotterPlan(r=r, t=1.0 / r, rho=rho, delta=delta)
    if not plan.satisfies_error_bound:
        raise ValidationError(
            f"planned r={r} fails the eigenvalue-shift bound; this should not happen"
        )
    return plan


def _expm_sym(m):
    w, v = np.linalg.eigh(m)
    return (v * np.exp(w)) @ v.T


def _logm_spd(m):
    sym = (m + m.T) / 2.0
    w, v = np.linalg.eigh(sym)
    if np.min(w) <= 0.0:
        raise ValidationError("matrix logarithm needs a positive-definite input")
    return (v * np.log(w)) @ v.T


def _spread(m):
    w = np.linalg.eigvalsh(m)
    return float(w[-1] - w[0])


def trotter_error_operator(a, b, t):
    """Remainder operator of the symmetric splitting at step t.

    Returns (D, ||D||) with e^{At/2} e^{Bt} e^{At/2} = e^{(A+B)t + D t^3}.
    Requires t in (0, 1/(2 rho)] with rho the exact spread sum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("A and B must be square matrices of equal size")
    if a.shape[0] > TROTTER_ERROR_MAX_DIM:
        raise SizeError(f"dense splitting remainder supports dim <= {TROTTER_ERROR_MAX_DIM}")
    if np.max(np.abs(a - a.T)) > 1e-10 or np.max(np.abs(b - b.T)) > 1e-10:
        raise ValidationError("A and B must be symmetric")
    if t <= 0.0:
        raise ValidationError("step t must be positive")
    rho = _spread(a) + _spread(b)
    if rho > 0.0 and t > 1.0 / (2.0 * rho) + 1e-12:
        raise ValidationError(f"step t={t} exceeds 1/(2 rho) = {1.0 / (2.0 * rho)}")
    half = _expm_sym(a * (t / 2.0))
    product = half @ _expm_sym(b * t) @ half
    d = (_logm_spd(product) - (a + b) * t) / t**3
    norm = float(np.max(np.abs(np.linalg.eigvalsh(d))))
    return d, norm


@dataclass(frozen=True)
class ClassicalMapping:
    """Layered classical model equivalent to the r-step splitting trace."""

    ising: ClassicalIsingModel
    r: int
    t: float
    floored_qubits: tuple

    @property
    def log_prefactor(self):
        return self.ising.log_prefactor


def map_to_classical(tim, plan, field_floor_delta=0.0):
    """Build the layered classical model whose partition sum equals the
    r-step splitting trace.

    Fields are floored at field_floor_delta / n first (a zero field makes the
    inter-layer bond infinite); every floored qubit is logged and reported.
    Intra-layer couplings are t J_uv, inter-layer bonds are
    -log(tanh(t h_u))/2 with layer r wrapping to layer 0; degenerate wraps
    (r <= 2) fold into duplicate-edge sums or a constant absorbed by the
    prefactor.
    """
    if not tim.is_stoquastic:
        raise NotStoquasticError("mapping requires h_u >= 0 (apply flip_fields first)")
    if not tim.is_ferromagnetic:
        raise NotStoquasticError("mapping requires ferromagnetic couplings")
    n = tim.n
    r = plan.r
    t = plan.t
    floor = field_floor_delta / n if field_floor_delta > 0 else 0.0
    fields = np.maximum(np.asarray(tim.fields, dtype=float), floor)
    floored = tuple(int(u) for u in np.flatnonzero(np.asarray(tim.fields) < floor))
    if floored:
        logger.info("floored fields at %.3e on qubits %s", floor, floored)
    if np.any(fields <= 0.0):
        raise ValidationError(
            "zero field makes tanh(t h) vanish; pass a positive field_floor_delta"
        )
    inter = -0.5 * np.log(np.tanh(t * fields))
    if np.any(inter < 0.0):
        raise ValidationError("inter-layer bond came out negative; t h too large")
    edge_acc = {}
    constant = 0.0

    def add_edge(i, j, w):
        nonlocal constant
        if w == 0.0:
            return
        if i == j:
            constant += w  # sigma_i^2 = 1
            return
        key = (i, j) if i < j else (j, i)
        edge_acc[key] = edge_acc.get(key, 0.0) + w

    for layer in range(r):
        base = layer * n
        for u, v, j in tim.couplings:
            add_edge(base + u, base + v, t * j)
        nxt = ((layer + 1) % r) * n
        for u in range(n):
            add_edge(base + u, nxt + u, float(inter[u]))
    log_gamma = -(n / 2.0) * math.log(2.0) + 0.5 * float(
        np.sum(np.log(np.sinh(2.0 * t * fields)))
    )
    log_prefactor = r * log_gamma + constant
    edges = [(i, j, w) for (i, j), w in sorted(edge_acc.items())]
    ising = ClassicalIsingModel(n * r, edges, log_prefactor=log_prefactor)
    return ClassicalMapping(ising=ising, r=r, t=t, floored_qubits=floored)


def _tim_dense_factors(tim, t):
    """Diagonal of e^{At} and the dense e^{Bt} (closed form per qubit)."""
    n = tim.n
    dim = 1 << n
    bits = (np.arange(dim)[:, None] >> np.arange(n)[None, :]) & 1
    sig = 1.0 - 2.0 * bits
    ea = np.zeros(dim)
    for u, v, j in tim.couplings:
        ea += j * sig[:, u] * sig[:, v]
    diag_a = np.exp(t * ea)
    ebt = np.ones((1, 1))
    for u in range(n):
        th = t * float(tim.fields[u])
        m = np.array([[math.cosh(th), math.sinh(th)], [math.sinh(th), math.cosh(th)]])
        ebt = np.kron(m, ebt)
    return diag_a, ebt


def trotterized_trace_exact(tim, r):
    """Dense trace of (e^{At} e^{Bt})^r at t = 1/r (n <= 10).

    Evaluated through the symmetric positive-definite similarity
    sqrt(e^{At}) e^{Bt} sqrt(e^{At}), whose eigenvalues are raised to the
    r-th power; converges (monotonically from above at these scales) to the
    exact partition value as r grows.
    """
    if tim.n > TRACE_MAX_QUBITS:
        raise SizeError(f"dense splitting trace supports n <= {TRACE_MAX_QUBITS}")
    r = int(r)
    if r < 1:
        raise ValidationError("r must be >= 1")
    t = 1.0 / r
    diag_a, ebt = _tim_dense_factors(tim, t)
    root = np.sqrt(diag_a)
    sym = root[:, None] * ebt * root[None, :]
    w = np.linalg.eigvalsh(sym)
    return float(np.sum(w**r))
