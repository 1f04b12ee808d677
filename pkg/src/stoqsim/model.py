"""Model containers: local stoquastic Hamiltonians and transverse-field Ising
instances, with validation and protocol-parameter derivation.

Terms are stored as dense Hermitian blocks on their support, which makes
spectral norms and row extraction straightforward.  All containers are
immutable after construction and safe to share across concurrent trials.
"""

import json

import numpy as np

from .bits import index_to_bits, validate_bitstring
from .errors import (
    DegenerateInstanceError,
    NotStoquasticError,
    ValidationError,
)

HERMITICITY_TOL = 1e-12
STOQUASTIC_TOL = 1e-12
MAX_SUPPORT = 10  # dense 2^k block; k beyond this is not desk scale


def _as_real_matrix(block):
    arr = np.asarray(block)
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag)) > HERMITICITY_TOL:
            raise ValidationError("term blocks must be real matrices")
        arr = arr.real
    return np.array(arr, dtype=float)


class LocalTerm:
    """One k-local interaction: an ordered qubit support and a dense block.

    Block index convention: bit j of the block index holds the value of qubit
    support[j].  Hermiticity is enforced here; stoquasticity is checked by
    `is_stoquastic` and enforced when terms join a StoquasticHamiltonian.
    """

    __slots__ = ("support", "block")

    def __init__(self, support, block):
        support = tuple(int(u) for u in support)
        if len(support) == 0:
            raise ValidationError("term support must be non-empty")
        if len(set(support)) != len(support):
            raise ValidationError(f"support has repeated qubits: {support}")
        if any(u < 0 for u in support):
            raise ValidationError(f"negative qubit index in support: {support}")
        if list(support) != sorted(support):
            raise ValidationError(f"support must be ascending: {support}")
        if len(support) > MAX_SUPPORT:
            raise ValidationError(f"support size {len(support)} exceeds {MAX_SUPPORT}")
        block = _as_real_matrix(block)
        dim = 1 << len(support)
        if block.shape != (dim, dim):
            raise ValidationError(
                f"block shape {block.shape} does not match support size {len(support)}"
            )
        if np.max(np.abs(block - block.T)) > HERMITICITY_TOL:
            raise ValidationError("term block is not Hermitian within 1e-12")
        block.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "block", block)

    def __setattr__(self, *_):
        raise AttributeError("LocalTerm is immutable")

    @property
    def k(self):
        return len(self.support)

    def spectral_norm(self):
        return float(np.max(np.abs(np.linalg.eigvalsh(self.block))))


def is_stoquastic(term):
    """True iff every off-diagonal block entry is <= 1e-12 (non-positive)."""
    block = term.block
    off = block - np.diag(np.diag(block))
    return bool(np.max(off) <= STOQUASTIC_TOL)


class StoquasticHamiltonian:
    """Sum of k-local stoquastic terms on n qubits."""

    __slots__ = ("n", "terms", "_norms")

    def __init__(self, n, terms):
        n = int(n)
        terms = tuple(terms)
        if n < 1:
            raise ValidationError("need at least one qubit")
        if len(terms) < 1:
            raise ValidationError("need at least one term")
        for term in terms:
            if not isinstance(term, LocalTerm):
                raise ValidationError("terms must be LocalTerm instances")
            if max(term.support) >= n:
                raise ValidationError(
                    f"term support {term.support} out of range for n={n}"
                )
            if not is_stoquastic(term):
                raise NotStoquasticError(
                    f"term on support {term.support} has a positive off-diagonal entry"
                )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_norms", None)

    def __setattr__(self, *_):
        raise AttributeError("StoquasticHamiltonian is immutable")

    @property
    def num_terms(self):
        return len(self.terms)

    @property
    def locality(self):
        return max(term.k for term in self.terms)

    def term_norms(self):
        if self._norms is None:
            object.__setattr__(
                self, "_norms", tuple(t.spectral_norm() for t in self.terms)
            )
        return self._norms

    def total_norm(self):
        """Sum of the terms' spectral norms (the interaction scale J)."""
        return float(sum(self.term_norms()))

    def diagonal_entry(self, x):
        """<x|H|x> for an integer state index."""
        val = 0.0
        for term in self.terms:
            a = _gather_bits(x, term.support)
            val += term.block[a, a]
        return val

    def row(self, x):
        """Sparse row {y: <x|H|y>} of the dense matrix, integer-indexed."""
        row = {}
        for term in self.terms:
            support = term.support
            a = _gather_bits(x, support)
            block_row = term.block[a]
            base = x
            for j, u in enumerate(support):
                if (a >> j) & 1:
                    base &= ~(1 << u)
            for b in range(block_row.shape[0]):
                val = block_row[b]
                if val == 0.0:
                    continue
                y = base
                for j, u in enumerate(support):
                    if (b >> j) & 1:
                        y |= 1 << u
                row[y] = row.get(y, 0.0) + float(val)
        return row


def _gather_bits(x, support):
    a = 0
    for j, u in enumerate(support):
        a |= ((x >> u) & 1) << j
    return a


class TimModel:
    """Transverse-field Ising instance: ZZ couplings J_uv and X fields h_u.

    Stoquastic iff every field is non-negative; ferromagnetic iff every
    coupling is non-negative.
    """

    __slots__ = ("n", "couplings", "fields")

    def __init__(self, n, couplings, fields, ferromagnetic=True):
        n = int(n)
        if n < 1:
            raise ValidationError("need at least one qubit")
        fields = np.array(fields, dtype=float)
        if fields.shape != (n,):
            raise ValidationError(f"fields must have length {n}")
        seen = set()
        normalized = []
        for u, v, j in couplings:
            u, v, j = int(u), int(v), float(j)
            if not (0 <= u < v < n):
                raise ValidationError(f"coupling ({u},{v}) must satisfy 0 <= u < v < n")
            if (u, v) in seen:
                raise ValidationError(f"duplicate coupling ({u},{v})")
            seen.add((u, v))
            if ferromagnetic and j < 0:
                raise ValidationError(f"ferromagnetic model requires J_uv >= 0, got {j}")
            normalized.append((u, v, j))
        fields.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "couplings", tuple(normalized))
        object.__setattr__(self, "fields", fields)

    def __setattr__(self, *_):
        raise AttributeError("TimModel is immutable")

    @property
    def is_stoquastic(self):
        return bool(np.all(self.fields >= 0))

    @property
    def is_ferromagnetic(self):
        return all(j >= 0 for _, _, j in self.couplings)

    @property
    def max_interaction(self):
        """Largest interaction magnitude, max(J_uv, |h_u|)."""
        vals = [abs(j) for _, _, j in self.couplings] + [float(np.max(np.abs(self.fields)))]
        return max(vals) if vals else 0.0

    def flip_fields(self, qubits):
        """Sign-flip gauge: negate h_u on the selected qubits.

        This is the single-qubit Z conjugation; it changes no coupling.  It is
        opt-in and never applied silently.
        """
        qubits = set(int(u) for u in qubits)
        if any(u < 0 or u >= self.n for u in qubits):
            raise ValidationError("flip qubit index out of range")
        fields = np.array(self.fields)
        for u in qubits:
            fields[u] = -fields[u]
        return TimModel(self.n, self.couplings, fields)


def tim_to_local(tim):
    """Expand a stoquastic TIM into local terms: -J_uv ZZ and -h_u X.

    Exact zero coefficients generate no term.  Raises NotStoquasticError for
    negative fields; apply TimModel.flip_fields first if a gauge is intended.
    """
    if not tim.is_stoquastic:
        raise NotStoquasticError(
            "TIM with a negative field is not stoquastic; flip_fields can fix the gauge"
        )
    terms = []
    for u, v, j in tim.couplings:
        if j == 0.0:
            continue
        diag = np.array([1.0, -1.0, -1.0, 1.0])  # sigma_u * sigma_v over block index
        terms.append(LocalTerm((u, v), np.diag(-j * diag)))
    for u in range(tim.n):
        h = float(tim.fields[u])
        if h == 0.0:
            continue
        terms.append(LocalTerm((u,), -h * np.array([[0.0, 1.0], [1.0, 0.0]])))
    if not terms:
        raise DegenerateInstanceError("TIM has no non-zero interactions")
    return StoquasticHamiltonian(tim.n, terms)


class ProblemInstance:
    """A decision instance: Hamiltonian plus the promised energy thresholds."""

    __slots__ = ("hamiltonian", "lambda_yes", "lambda_no")

    def __init__(self, hamiltonian, lambda_yes, lambda_no):
        lambda_yes = float(lambda_yes)
        lambda_no = float(lambda_no)
        if not lambda_yes < lambda_no:
            raise ValidationError(
                f"need lambda_yes < lambda_no, got {lambda_yes} >= {lambda_no}"
            )
        object.__setattr__(self, "hamiltonian", hamiltonian)
        object.__setattr__(self, "lambda_yes", lambda_yes)
        object.__setattr__(self, "lambda_no", lambda_no)

    def __setattr__(self, *_):
        raise AttributeError("ProblemInstance is immutable")


class ProtocolParams:
    """Derived protocol scale: J = sum of term norms, beta = 1/(2J), and the
    decision gap beta*(lambda_no - lambda_yes)."""

    __slots__ = ("total_norm_J", "beta", "decision_gap", "trivial", "trivial_reason")

    def __init__(self, total_norm_J, beta, decision_gap, trivial=False, trivial_reason=None):
        object.__setattr__(self, "total_norm_J", float(total_norm_J))
        object.__setattr__(self, "beta", float(beta))
        object.__setattr__(self, "decision_gap", float(decision_gap))
        object.__setattr__(self, "trivial", bool(trivial))
        object.__setattr__(self, "trivial_reason", trivial_reason)

    def __setattr__(self, *_):
        raise AttributeError("ProtocolParams is immutable")


def protocol_params(instance):
    """Compute (J, beta, decision gap) and range-check the thresholds.

    Thresholds outside [-J, J] make the promise decidable without any walk;
    such instances are flagged trivial rather than rejected.
    """
    h = instance.hamiltonian
    total = h.total_norm()
    if total <= 0.0:
        raise DegenerateInstanceError("all term norms vanish; no scale to set beta")
    beta = 1.0 / (2.0 * total)
    gap = beta * (instance.lambda_no - instance.lambda_yes)
    trivial = False
    reason = None
    if instance.lambda_yes < -total:
        trivial, reason = True, "lambda_yes below -J: no state can satisfy the yes promise"
    elif instance.lambda_no > total:
        trivial, reason = True, "lambda_no above J: every state satisfies the yes threshold"
    return ProtocolParams(total, beta, gap, trivial, reason)


def hamiltonian_to_json(h):
    return {
        "n": h.n,
        "terms": [
            {"qubits": list(t.support), "matrix": t.block.tolist()} for t in h.terms
        ],
    }


def tim_to_json(tim):
    return {
        "n": tim.n,
        "couplings": [[u, v, j] for u, v, j in tim.couplings],
        "fields": list(map(float, tim.fields)),
    }


def model_from_json(data):
    """Build a model from a parsed JSON object (generic terms or TIM form)."""
    if not isinstance(data, dict) or "n" not in data:
        raise ValidationError("model JSON must be an object with an 'n' field")
    if "terms" in data:
        terms = []
        for i, td in enumerate(data["terms"]):
            if "qubits" not in td or "matrix" not in td:
                raise ValidationError(f"terms[{i}] needs 'qubits' and 'matrix'")
            terms.append(LocalTerm(td["qubits"], td["matrix"]))
        return StoquasticHamiltonian(data["n"], terms)
    if "couplings" in data or "fields" in data:
        return TimModel(
            data["n"],
            data.get("couplings", []),
            data.get("fields", [0.0] * int(data["n"])),
            ferromagnetic=False,
        )
    raise ValidationError("model JSON must contain 'terms' or 'couplings'/'fields'")


def load_model(path):
    """Load a Hamiltonian or TIM model from a JSON file."""
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"model file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"model file {path} is not valid JSON: {e}")
    return model_from_json(data)


def as_local_hamiltonian(model):
    """Coerce a loaded model to a StoquasticHamiltonian (expanding a TIM)."""
    if isinstance(model, StoquasticHamiltonian):
        return model
    if isinstance(model, TimModel):
        return tim_to_local(model)
    raise ValidationError(f"not a model object: {type(model).__name__}")


def parse_witness_start(x_m, n):
    """Validate Merlin's start string and return it unchanged."""
    validate_bitstring(x_m, n)
    return x_m


def describe_state(ix, n):
    return index_to_bits(ix, n)
