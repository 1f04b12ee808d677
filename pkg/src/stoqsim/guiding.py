"""Guiding states: amplitude evaluators, regularization, and padding.

A guiding state is a deterministic non-negative amplitude function over bit
strings.  The walk always consumes the regularized version, whose values are
clamped into [phi_min, 1] with phi_min = 2^{-n-1} by default.
"""

import math

import numpy as np

from .bits import bits_to_index, index_to_bits, validate_bitstring
from .errors import SizeError, ValidationError

PADDING_MAX_QUBITS = 12
NORMALIZATION_TOL = 1e-6


def default_phi_min(n):
    return 2.0 ** (-n - 1)


class GuidingState:
    """Wraps an amplitude callback with provenance and validation."""

    __slots__ = ("n", "_fn", "description")

    def __init__(self, n, fn, description="user"):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "_fn", fn)
        object.__setattr__(self, "description", description)

    def __setattr__(self, *_):
        raise AttributeError("GuidingState is immutable")

    def amplitude(self, x):
        validate_bitstring(x, self.n)
        val = float(self._fn(x))
        if val < 0.0 or math.isnan(val):
            raise ValidationError(
                f"guide {self.description!r} returned a negative/NaN amplitude at {x}"
            )
        return val


class RegularizedGuide:
    """Clamp of a base guide into [phi_min, 1]."""

    __slots__ = ("base", "phi_min")

    def __init__(self, base, phi_min=None):
        if phi_min is None:
            phi_min = default_phi_min(base.n)
        phi_min = float(phi_min)
        if not 0.0 < phi_min <= 1.0:
            raise ValidationError(f"phi_min must be in (0, 1], got {phi_min}")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "phi_min", phi_min)

    def __setattr__(self, *_):
        raise AttributeError("RegularizedGuide is immutable")

    @property
    def n(self):
        return self.base.n

    def amplitude(self, x):
        val = self.base.amplitude(x)
        if val > 1.0:
            return 1.0
        if val < self.phi_min:
            return self.phi_min
        return val


def regularize(guide, x, phi_min=None):
    """Regularized amplitude at one string (three-case clamp)."""
    if isinstance(guide, RegularizedGuide):
        return guide.amplitude(x)
    return RegularizedGuide(guide, phi_min).amplitude(x)


def as_regularized(guide, phi_min=None):
    if isinstance(guide, RegularizedGuide):
        return guide
    return RegularizedGuide(guide, phi_min)


def amplitude_vector(guide, n):
    """Amplitudes at every integer state index (desk-scale enumeration)."""
    if n > PADDING_MAX_QUBITS:
        raise SizeError(f"amplitude enumeration supports n <= {PADDING_MAX_QUBITS}")
    return np.array(
        [guide.amplitude(index_to_bits(ix, n)) for ix in range(1 << n)]
    )


def uniform_guide(n):
    amp = 2.0 ** (-n / 2.0)
    return GuidingState(n, lambda x: amp, description="uniform")


def product_guide(probs):
    """Product state: qubit u is 1 with probability p_u; amplitudes are the
    square roots of the bit probabilities."""
    probs = [float(p) for p in probs]
    if any(p < 0.0 or p > 1.0 for p in probs):
        raise ValidationError("product guide probabilities must lie in [0, 1]")
    roots_one = [math.sqrt(p) for p in probs]
    roots_zero = [math.sqrt(1.0 - p) for p in probs]

    def fn(x):
        val = 1.0
        for u, c in enumerate(x):
            val *= roots_one[u] if c == "1" else roots_zero[u]
        return val

    return GuidingState(len(probs), fn, description="product")


def exact_guide(h):
    """Oracle ground-state amplitudes (n <= 12)."""
    from . import oracle  # deferred; oracle imports this module

    if h.n > oracle.ORACLE_MAX_QUBITS:
        raise SizeError("exact guide needs the dense oracle (n <= 12)")
    _, psi = oracle.ground_state_exact(h)

    def fn(x):
        return float(psi[bits_to_index(x)])

    return GuidingState(h.n, fn, description="exact-oracle")


def padded_guide(omega):
    """Uniform-padding construction: C_n (omega(x) + 2^{-n}), renormalized.

    Guarantees every amplitude is at least 2^{-n-1} while preserving pointwise
    domination up to the 1/C_n factor.  Needs full enumeration for the
    normalization constant, so it is restricted to n <= 12.
    """
    n = omega.n
    if n > PADDING_MAX_QUBITS:
        raise SizeError(f"padded_guide supports n <= {PADDING_MAX_QUBITS}")
    amps = amplitude_vector(omega, n)
    total = float(np.sum(amps**2))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValidationError(
            f"base guide is not normalized: sum of squares = {total:.8f}"
        )
    pad = 2.0**-n
    c_n = 1.0 / math.sqrt(float(np.sum((amps + pad) ** 2)))
    padded = (amps + pad) * c_n

    def fn(x):
        return float(padded[bits_to_index(x)])

    g = GuidingState(n, fn, description="padded")
    return g, c_n


def builtin_guides(h, kind):
    """Named guide factory: 'uniform', 'exact', or 'product:p1,p2,...'."""
    if kind == "uniform":
        return uniform_guide(h.n)
    if kind == "exact":
        return exact_guide(h)
    if kind.startswith("product:"):
        parts = kind[len("product:"):].split(",")
        try:
            probs = [float(p) for p in parts]
        except ValueError:
            raise ValidationError(f"cannot parse product guide spec {kind!r}")
        if len(probs) != h.n:
            raise ValidationError(
                f"product guide needs {h.n} probabilities, got {len(probs)}"
            )
        return product_guide(probs)
    raise ValidationError(f"unknown guide kind {kind!r}")
