"""Numerical tolerances used across the library.

Everything that decides "equal", "null", "fixed" or "isometry" reads its
threshold from :data:`TOL`, so experiments stay reproducible when a value
is changed in one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian_symmetry: float = 1e-14
    isometry_input: float = 1e-4       # normalize_isometry refuses beyond this
    isometry_output: float = 1e-12
    determinant: float = 1e-10
    null_vector: float = 1e-10         # |<z,z>| <= tol * |z|^2
    classify: float = 1e-8             # separates isometry classes
    projective_equal: float = 1e-9
    chain_membership: float = 1e-8
    eigenspace_rank: float = 1e-6      # relative singular-value cut for eigenspaces


TOL = Tolerances()
