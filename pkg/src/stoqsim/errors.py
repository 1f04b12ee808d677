"""Exception types shared across the package.

ValidationError subclasses map to CLI exit code 2, DiagnosticError to exit
code 3 (statistical/diagnostic failures on otherwise valid input).
"""


class ValidationError(ValueError):
    """Invalid model, witness, or configuration data."""


class SizeError(ValidationError):
    """Problem too large for an exact desk-scale routine."""


class NotStoquasticError(ValidationError):
    """A term (or field sign) violates the non-positive off-diagonal rule."""


class DegenerateInstanceError(ValidationError):
    """Instance has no usable scale (all interaction norms vanish)."""


class OrthogonalGuideError(ValidationError):
    """Guide has zero overlap with the non-negative ground state."""


class ConsistencyError(RuntimeError):
    """Internal cross-check failed (e.g. a negative walk rate showed up)."""


class DiagnosticError(RuntimeError):
    """A statistical diagnostic failed (estimator ladder collapse etc.)."""
