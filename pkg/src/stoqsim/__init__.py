"""Projection Monte Carlo verification of stoquastic Hamiltonians and a
Trotter + cluster-MCMC partition-function pipeline for the ferromagnetic
transverse-field Ising model, cross-validated by an exact dense oracle."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
