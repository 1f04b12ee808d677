"""Branching-walk verification.

A witness (lambda_M, guide, x_M) turns the Hamiltonian into a non-negative
sparse operator G = I - beta (H - lambda_M I); the walk moves an integer
population over bit strings, each occupied point spawning independent
Poisson offspring at rate gamma(x) * phi(y)/phi(x) * G(x, y).  The verifier
rejects on population overflow or extinction and accepts survivors.

Two engines share identical draw sequences: a dictionary-based engine that
works at any n, and an enumerated CSR engine (n <= 14) whose trial loops run
in the selected kernel backend.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bits import bits_to_index, index_to_bits, validate_bitstring
from .errors import ConsistencyError, SizeError, ValidationError
from .guiding import amplitude_vector, as_regularized
from .model import protocol_params
from .rng import SALT_START, SALT_WALK, Stream

RATE_TOL = 1e-12
CSR_MAX_QUBITS = 14
ORACLE_START_MAX_QUBITS = 12


class WalkerPopulation:
    """Sparse population: occupied bit strings and their positive counts."""

    __slots__ = ("n", "_counts")

    def __init__(self, n, counts=None, _int_counts=None):
        self.n = int(n)
        if _int_counts is not None:
            self._counts = _int_counts
        else:
            self._counts = {}
            for key, cnt in (counts or {}).items():
                cnt = int(cnt)
                if cnt < 0:
                    raise ValidationError("occupation counts must be non-negative")
                if cnt > 0:
                    validate_bitstring(key, self.n)
                    self._counts[bits_to_index(key)] = cnt

    @property
    def total(self):
        return sum(self._counts.values())

    @property
    def occupations(self):
        return {index_to_bits(ix, self.n): cnt for ix, cnt in sorted(self._counts.items())}

    def count(self, x):
        return self._counts.get(bits_to_index(x), 0)

    def __len__(self):
        return len(self._counts)


@dataclass(frozen=True)
class WalkConfig:
    """Walk parameters: length, population cutoff, witness data, seeding."""

    steps: int
    gamma_max: int
    lambda_m: float
    x_m: str
    seed: int = 0
    trials: int = 1
    unconstrained: bool = False  # moment mode: no cutoff test, no early abort
    record_trajectory: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.gamma_max < 0:
            raise ValidationError("gamma_max must be >= 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")


@dataclass(frozen=True)
class WalkOutcome:
    verdict: str  # "accept" | "reject"
    reject_reason: str | None = None  # "extinct" | "overflow-at-step-t" | "witness-format"
    reject_step: int | None = None
    trajectory: tuple | None = None


AcceptanceEstimate = namedtuple(
    "AcceptanceEstimate",
    ["p_hat", "stderr", "accepts", "trials", "extinct", "overflow", "format_reject",
     "step_alive", "step_gamma_mean"],
)

VerdictTrials = namedtuple("VerdictTrials", ["verdicts", "reject_steps", "alive", "gamma_sum"])

Envelope = namedtuple("Envelope", ["specific", "generic"])


def green_row(h, params, lambda_m, x):
    """Non-zero entries of row x of G as [(bitstring y, value)], y ascending."""
    ints = _green_row_int(h, params.beta, lambda_m, bits_to_index(validate_bitstring(x, h.n)))
    return [(index_to_bits(y, h.n), g) for y, g in ints]


def _green_row_int(h, beta, lambda_m, x):
    row = h.row(x)
    hxx = row.pop(x, 0.0)
    out = {}
    diag = 1.0 - beta * (hxx - lambda_m)
    if diag != 0.0:
        out[x] = diag
    for y, val in row.items():
        g = -beta * val
        if g != 0.0:
            out[y] = g
    items = sorted(out.items())
    for y, g in items:
        if g < -RATE_TOL:
            raise ConsistencyError(
                f"negative walk rate {g:.3e} at ({x}, {y}); the Hamiltonian is not "
                "stoquastic or lambda_M is far outside [-J, J]"
            )
    return [(y, g if g > 0.0 else 0.0) for y, g in items if g != 0.0]


def transition_row(green_entries, guide, x):
    """Walk rates p_xy = phi(y)/phi(x) * g_xy from a green_row output."""
    reg = as_regularized(guide)
    phi_x = reg.amplitude(x)
    return [(y, reg.amplitude(y) / phi_x * g) for y, g in green_entries]


class WalkProcess:
    """Bound walk context: Hamiltonian, witness energy, regularized guide."""

    def __init__(self, h, params, lambda_m, guide):
        self.h = h
        self.beta = params.beta
        self.lambda_m = float(lambda_m)
        self.guide = as_regularized(guide)
        self._rows = {}
        self._phi = {}

    def _phi_at(self, ix):
        val = self._phi.get(ix)
        if val is None:
            val = self.guide.amplitude(index_to_bits(ix, self.h.n))
            self._phi[ix] = val
        return val

    def rates(self, ix):
        """Cached transition row [(y_int, p_xy)] for an integer state."""
        row = self._rows.get(ix)
        if row is None:
            phi_x = self._phi_at(ix)
            row = [
                (y, self._phi_at(y) / phi_x * g)
                for y, g in _green_row_int(self.h, self.beta, self.lambda_m, ix)
            ]
            self._rows[ix] = row
        return row

    def step(self, pop, rng):
        """One branching step: independent Poisson offspring per (x, y) rate."""
        nxt = {}
        for x in sorted(pop._counts):
            cnt = pop._counts[x]
            for y, p in self.rates(x):
                k = rng.poisson(cnt * p)
                if k:
                    nxt[y] = nxt.get(y, 0) + k
        return WalkerPopulation(pop.n, _int_counts=nxt)


def step(process, pop, rng):
    """Module-level alias for WalkProcess.step."""
    return process.step(pop, rng)


def check_witness_format(instance, params, lambda_m, x_m):
    """None if the witness fits the required format, else a reason string."""
    try:
        validate_bitstring(x_m, instance.hamiltonian.n)
    except ValidationError:
        return f"x_M must be a {instance.hamiltonian.n}-bit string"
    if lambda_m > instance.lambda_yes:
        return "lambda_M exceeds lambda_yes"
    if lambda_m < -params.total_norm_J:
        return "lambda_M below -J"
    return None


def run_walk(instance, guide, config, rng=None):
    """Run one verification walk and return its outcome.

    A malformed witness produces a format reject without consuming any
    randomness.  With `unconstrained` set, the cutoff test is skipped (the
    mode used for moment measurements).
    """
    h = instance.hamiltonian
    params = protocol_params(instance)
    reason = check_witness_format(instance, params, config.lambda_m, config.x_m)
    if reason is not None:
        return WalkOutcome(verdict="reject", reject_reason="witness-format", reject_step=None)
    if rng is None:
        rng = Stream(config.seed, 0, SALT_WALK)
    process = WalkProcess(h, params, config.lambda_m, guide)
    return _run_process(process, config, rng)


def _run_process(process, config, rng):
    pop = WalkerPopulation(process.h.n, {config.x_m: 1})
    trajectory = [1] if config.record_trajectory else None
    enforce = not config.unconstrained
    if enforce and pop.total > config.gamma_max:
        return WalkOutcome("reject", "overflow-at-step-0", 0,
                           tuple(trajectory) if trajectory else None)
    total = pop.total
    for t in range(1, config.steps + 1):
        pop = process.step(pop, rng)
        total = pop.total
        if trajectory is not None:
            trajectory.append(total)
        if enforce and total > config.gamma_max:
            return WalkOutcome("reject", f"overflow-at-step-{t}", t,
                               tuple(trajectory) if trajectory else None)
        if total == 0:
            if trajectory is not None:
                trajectory.extend([0] * (config.steps - t))
            return WalkOutcome("reject", "extinct", t,
                               tuple(trajectory) if trajectory else None)
    if total >= 1:
        return WalkOutcome("accept", None, None, tuple(trajectory) if trajectory else None)
    return WalkOutcome("reject", "extinct", config.steps,
                       tuple(trajectory) if trajectory else None)


def transition_matrix_csr(h, params, lambda_m, guide):
    """CSR transition rates over the full enumerated state space (n <= 14)."""
    if h.n > CSR_MAX_QUBITS:
        raise SizeError(f"enumerated walk engine supports n <= {CSR_MAX_QUBITS}")
    reg = as_regularized(guide)
    dim = 1 << h.n
    phi = np.array([reg.amplitude(index_to_bits(ix, h.n)) for ix in range(dim)])
    indptr = np.zeros(dim + 1, dtype=np.int32)
    indices = []
    data = []
    for x in range(dim):
        row = _green_row_int(h, params.beta, lambda_m, x)
        phi_x = phi[x]
        for y, g in row:
            indices.append(y)
            data.append(phi[y] / phi_x * g)
        indptr[x + 1] = len(indices)
    return indptr, np.array(indices, dtype=np.int32), np.array(data, dtype=np.float64)


def _chunks(total, parts):
    bounds = np.linspace(0, total, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_verdict_trials(h, params, lambda_m, guide, config):
    """Kernel-backed verification trials.

    Per-trial streams come from (seed, trial index), so the result is
    independent of the thread layout.  Besides the per-trial verdicts and
    rejection steps, the per-step population totals over still-running trials
    are aggregated.
    """
    if h.n <= CSR_MAX_QUBITS:
        indptr, indices, data = transition_matrix_csr(h, params, lambda_m, guide)
        x0 = bits_to_index(config.x_m)
        enforce = not config.unconstrained
        pieces = _chunks(config.trials, min(config.threads, config.trials))
        if len(pieces) == 1:
            out = kernels.walk_verdicts(
                indptr, indices, data, x0, config.steps, config.gamma_max,
                enforce, config.seed, SALT_WALK, 0, config.trials,
            )
            return VerdictTrials(*out)
        with ThreadPoolExecutor(max_workers=len(pieces)) as pool:
            futs = [
                pool.submit(
                    kernels.walk_verdicts, indptr, indices, data, x0, config.steps,
                    config.gamma_max, enforce, config.seed, SALT_WALK, lo, hi,
                )
                for lo, hi in pieces
            ]
            outs = [f.result() for f in futs]
        return VerdictTrials(
            np.concatenate([o[0] for o in outs]),
            np.concatenate([o[1] for o in outs]),
            np.sum([o[2] for o in outs], axis=0),
            np.sum([o[3] for o in outs], axis=0),
        )
    # large-n path: dictionary engine per trial
    process = WalkProcess(h, params, lambda_m, guide)
    verdicts = np.empty(config.trials, dtype=np.int8)
    steps_out = np.full(config.trials, -1, dtype=np.int32)
    alive = np.zeros(config.steps + 1, dtype=np.int64)
    gamma_sum = np.zeros(config.steps + 1, dtype=np.int64)
    traj_config = WalkConfig(
        steps=config.steps, gamma_max=config.gamma_max, lambda_m=config.lambda_m,
        x_m=config.x_m, seed=config.seed, trials=config.trials,
        unconstrained=config.unconstrained, record_trajectory=True,
    )
    for trial in range(config.trials):
        outcome = _run_process(process, traj_config, Stream(config.seed, trial, SALT_WALK))
        if outcome.verdict == "accept":
            verdicts[trial] = 0
        elif outcome.reject_reason == "extinct":
            verdicts[trial] = 1
            steps_out[trial] = outcome.reject_step
        else:
            verdicts[trial] = 2
            steps_out[trial] = outcome.reject_step
        last = outcome.reject_step if outcome.reject_step is not None else config.steps
        for t in range(min(last, config.steps) + 1):
            alive[t] += 1
            gamma_sum[t] += outcome.trajectory[t]
    return VerdictTrials(verdicts, steps_out, alive, gamma_sum)


def run_population_trajectories(h, params, lambda_m, guide, x_m, steps, trials, seed, threads=1):
    """Unconstrained population totals, shape (trials, steps + 1)."""
    if h.n > CSR_MAX_QUBITS:
        raise SizeError("trajectory recording uses the enumerated engine (n <= 14)")
    indptr, indices, data = transition_matrix_csr(h, params, lambda_m, guide)
    x0 = bits_to_index(x_m)
    pieces = _chunks(trials, min(threads, trials))
    if len(pieces) == 1:
        return kernels.walk_trajectories(
            indptr, indices, data, x0, steps, seed, SALT_WALK, 0, trials
        )
    with ThreadPoolExecutor(max_workers=len(pieces)) as pool:
        futs = [
            pool.submit(
                kernels.walk_trajectories, indptr, indices, data, x0, steps,
                seed, SALT_WALK, lo, hi,
            )
            for lo, hi in pieces
        ]
        return np.concatenate([f.result() for f in futs])


def estimate_acceptance(instance, guide, config):
    """Empirical acceptance rate over independent trials.

    Deterministic given (seed, trials); a malformed witness short-circuits to
    a format reject with p_hat = 0.
    """
    h = instance.hamiltonian
    params = protocol_params(instance)
    reason = check_witness_format(instance, params, config.lambda_m, config.x_m)
    if reason is not None:
        return AcceptanceEstimate(0.0, 0.0, 0, config.trials, 0, 0, True, [], [])
    trials_out = run_verdict_trials(h, params, config.lambda_m, guide, config)
    verdicts = trials_out.verdicts
    accepts = int(np.sum(verdicts == 0))
    extinct = int(np.sum(verdicts == 1))
    overflow = int(np.sum(verdicts == 2))
    p_hat = accepts / config.trials
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / config.trials)
    alive = trials_out.alive
    with np.errstate(invalid="ignore"):
        gamma_mean = np.where(alive > 0, trials_out.gamma_sum / np.maximum(alive, 1), 0.0)
    return AcceptanceEstimate(
        p_hat, stderr, accepts, config.trials, extinct, overflow, False,
        [int(a) for a in alive], [float(g) for g in gamma_mean],
    )


def soundness_envelope(n, guide_norm, phi_xm, gap, steps):
    """Upper bounds on the acceptance probability of a no-instance.

    `specific` uses the actual guide norm and start amplitude; `generic` only
    uses the regularization bounds (norm <= 2^{n/2}, phi(x_M) >= 2^{-n-1}).
    """
    if gap < 0:
        raise ValidationError("decision gap must be >= 0")
    decay = (1.0 - gap) ** steps
    specific = (guide_norm / phi_xm) * decay
    generic = 2.0 ** (1.5 * n + 1.0) * decay
    return Envelope(specific=specific, generic=generic)


def envelope_for(h, guide, x_m, gap, steps):
    """Soundness envelope evaluated for a concrete regularized guide."""
    reg = as_regularized(guide)
    phi = amplitude_vector(reg, h.n)
    norm = float(np.linalg.norm(phi))
    return soundness_envelope(h.n, norm, float(phi[bits_to_index(x_m)]), gap, steps)


def choose_start(h, guide, params, rng=None):
    """Pick the walk's start string.

    Oracle mode (n <= 12) returns the steady-state argmax over the good set.
    Otherwise product/uniform guides are sampled proportional to phi^2 and
    generic guides take the best of a random probe set, falling back to the
    all-zeros string with a warning if every probe has zero amplitude.
    """
    from . import oracle

    reg = as_regularized(guide)
    if h.n <= ORACLE_START_MAX_QUBITS:
        return oracle.best_start_state(h, params, reg)
    if rng is None:
        rng = Stream(0, 0, SALT_START)
    base = reg.base
    if base.description == "uniform":
        return "".join("1" if rng.uniform() < 0.5 else "0" for _ in range(h.n))
    if base.description == "product":
        bits = []
        for u in range(h.n):
            prefix = "".join(bits)
            amp_one = base.amplitude(prefix + "1" + "0" * (h.n - u - 1))
            amp_zero = base.amplitude(prefix + "0" + "0" * (h.n - u - 1))
            denom = amp_one**2 + amp_zero**2
            p_one = amp_one**2 / denom if denom > 0 else 0.0
            bits.append("1" if rng.uniform() < p_one else "0")
        return "".join(bits)
    best, best_amp = None, 0.0
    for _ in range(4096):
        probe = "".join("1" if rng.uniform() < 0.5 else "0" for _ in range(h.n))
        amp = base.amplitude(probe)
        if amp > best_amp:
            best, best_amp = probe, amp
    if best is None:
        import warnings

        warnings.warn("guide probe found no positive amplitude; starting at all zeros")
        return "0" * h.n
    return best


def default_lengths(n, gap, safety_c=3.0, overflow_c=10.0):
    """Walk length and population cutoff from the decision gap.

    The proof-side cutoff is non-constructive, so the overflow factor is a
    configurable multiplier; raise it until acceptance saturates when running
    completeness experiments.
    """
    if gap <= 0:
        raise ValidationError("decision gap must be positive")
    steps = max(1, math.ceil(safety_c * n / gap))
    gamma_max = math.ceil(overflow_c * steps)
    return steps, gamma_max
