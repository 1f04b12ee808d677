import numpy as np
import pytest

from stoqsim import kernels
from stoqsim.model import LocalTerm, StoquasticHamiltonian


def random_stoquastic(rng, n, max_terms=4, max_k=3, off_prob=0.7):
    """Random k-local stoquastic Hamiltonian (shared test generator)."""
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        k = int(rng.integers(1, min(max_k, n) + 1))
        support = sorted(rng.choice(n, size=k, replace=False).tolist())
        dim = 1 << k
        diag = rng.uniform(-1.0, 1.0, dim)
        off = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i + 1, dim):
                if rng.random() < off_prob:
                    off[i, j] = -rng.uniform(0.0, 1.0)
        terms.append(LocalTerm(support, np.diag(diag) + off + off.T))
    return StoquasticHamiltonian(n, terms)


def kron_embed(op, qubit, n):
    """Independent dense embedding: bit u of the index is qubit u."""
    out = np.array([[1.0]])
    for u in range(n):
        out = np.kron(op, out) if u == qubit else np.kron(np.eye(2), out)
    return out


def kron_chain(ops):
    """Kronecker chain with qubit 0 as the fastest index: ops[u] acts on qubit u."""
    out = np.array([[1.0]])
    for op in ops:
        out = np.kron(op, out)
    return out


def gw_poisson_survival(steps):
    """Survival probability of a critical unit-mean Poisson branching process
    after `steps` generations, by iterating the generating function."""
    extinct = 0.0
    for _ in range(steps):
        extinct = np.exp(extinct - 1.0)
    return 1.0 - extinct


@pytest.fixture(scope="session", autouse=True)
def _warn_python_backend():
    if kernels.BACKEND != "compiled":
        import warnings

        warnings.warn(
            "running on the pure-Python kernel backend; the timed acceptance "
            "criteria expect the compiled extension"
        )
    yield
