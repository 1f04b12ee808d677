"""Deterministic random streams.

Every stochastic routine draws from a splitmix64 counter generator.  Streams
are derived from a (seed, stream, salt) triple so that per-trial streams are
independent of scheduling order and a run is reproducible from its seed alone.
The compiled kernels implement the identical arithmetic, so the compiled and
pure-Python backends produce bit-identical draws.

Poisson variates are exact-distribution: CDF inversion by sequential search
for means below 10 and Hormann's PTRS transformed rejection above.  A normal
approximation is never used.
"""

import math

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_MULT = 0xA24BAED4963EE407
_SALT_MULT = 0x9FB21C651E98DF25

# Purpose salts keep streams from colliding when one seed drives several
# subsystems in a single run.
SALT_GENERIC = 0
SALT_WALK = 1
SALT_ISING = 2
SALT_START = 3

PTRS_CUTOFF = 10.0


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_state(seed, stream=0, salt=0):
    """Initial splitmix64 state for stream `stream` of a seeded run."""
    s = mix64((int(seed) + _GOLDEN) & MASK64)
    s ^= mix64((int(stream) * _STREAM_MULT + int(salt) * _SALT_MULT + _GOLDEN) & MASK64)
    return s & MASK64


class Stream:
    """A single splitmix64 stream with uniform and Poisson draws."""

    __slots__ = ("state",)

    def __init__(self, seed, stream=0, salt=0):
        self.state = stream_state(seed, stream, salt)

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self):
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def poisson(self, mean):
        """Exact Poisson variate with the given non-negative mean."""
        if mean < 0.0 or math.isnan(mean):
            raise ValueError(f"Poisson mean must be >= 0, got {mean}")
        if mean == 0.0:
            return 0
        if mean < PTRS_CUTOFF:
            return self._poisson_inversion(mean)
        return self._poisson_ptrs(mean)

    def _poisson_inversion(self, mean):
        # CDF search; one uniform per variate.
        p = math.exp(-mean)
        cdf = p
        k = 0
        u = self.uniform()
        while u > cdf and k < 10000:
            k += 1
            p *= mean / k
            cdf += p
        return k

    def _poisson_ptrs(self, mean):
        # Hormann's PTRS rejection sampler, valid for mean >= 10.
        b = 0.931 + 2.53 * math.sqrt(mean)
        a = -0.059 + 0.02483 * b
        inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
        v_r = 0.9277 - 3.6224 / (b - 2.0)
        log_mean = math.log(mean)
        while True:
            u = self.uniform() - 0.5
            v = self.uniform()
            us = 0.5 - abs(u)
            k = math.floor((2.0 * a / us + b) * u + mean + 0.43)
            if us >= 0.07 and v <= v_r:
                return int(k)
            if k < 0 or (us < 0.013 and v > us):
                continue
            if math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b) <= (
                k * log_mean - mean - math.lgamma(k + 1.0)
            ):
                return int(k)
