"""Bit-string conventions.

A basis state of n qubits is written as a string of '0'/'1' characters where
character u (counting from the left, 0-based) is the value of qubit u.  The
integer encoding sets bit u of the index to the value of qubit u, so the
string "10" on two qubits is the integer 1.  Spin values use sigma = +1 for
bit 0 and sigma = -1 for bit 1.
"""

from .errors import ValidationError


def validate_bitstring(s, n):
    if not isinstance(s, str) or len(s) != n or any(c not in "01" for c in s):
        raise ValidationError(f"expected a {n}-character string of 0/1, got {s!r}")
    return s


def bits_to_index(s):
    """Integer state index for a bit string (qubit u -> bit u)."""
    ix = 0
    for u, c in enumerate(s):
        if c == "1":
            ix |= 1 << u
        elif c != "0":
            raise ValidationError(f"invalid bit character in {s!r}")
    return ix


def index_to_bits(ix, n):
    """Bit string of length n for an integer state index."""
    return "".join("1" if (ix >> u) & 1 else "0" for u in range(n))


def lex_sorted_states(n):
    """All 2^n state indices ordered by the lexicographic order of their strings."""
    return sorted(range(1 << n), key=lambda ix: index_to_bits(ix, n))


def sigma(ix, u):
    """Classical spin value (+1/-1) of qubit u in state ix."""
    return 1 - 2 * ((ix >> u) & 1)
