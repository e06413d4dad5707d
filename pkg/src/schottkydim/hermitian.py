"""Linear algebra over a Hermitian form of signature (1, n).

The library works internally in the *ball model*: the form is
``J = diag(1, -1, ..., -1)`` on ``C^(n+1)``, interior points of complex
hyperbolic space are the lines with ``<z, z> > 0`` and boundary points are
the null lines.  A fixed Cayley matrix conjugates the ball form to the
*Siegel* form used for Heisenberg coordinates (see :func:`cayley_matrix`).

Vectors are handled as numpy arrays whose last axis has length ``n + 1``
so that most functions broadcast over stacks of points.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .config import TOL
from .errors import ConditioningError, DomainError, InputError, NumericError

ELLIPTIC = "elliptic"
PARABOLIC = "parabolic"
HYPERBOLIC = "hyperbolic"


@lru_cache(maxsize=None)
def _ball_form(n):
    J = np.diag([1.0] + [-1.0] * n).astype(complex)
    J.setflags(write=False)
    return J


@lru_cache(maxsize=None)
def _siegel_form(n):
    J = np.zeros((n + 1, n + 1), dtype=complex)
    J[0, n] = J[n, 0] = 1.0
    for i in range(1, n):
        J[i, i] = -1.0
    J.setflags(write=False)
    return J


@lru_cache(maxsize=None)
def cayley_matrix(n):
    """Change of basis from Siegel coordinates to ball coordinates.

    Columns 0 and n are the null vectors ``(e_0 + e_n)/sqrt(2)`` and
    ``(e_0 - e_n)/sqrt(2)``; the middle columns are the untouched basis
    vectors.  It satisfies ``C* J_ball C = J_siegel`` where the Siegel form
    reads ``<z, w> = z_0 conj(w_n) + z_n conj(w_0) - sum z_i conj(w_i)``.
    """
    s = 1.0 / np.sqrt(2.0)
    C = np.eye(n + 1, dtype=complex)
    C[0, 0] = C[n, 0] = s
    C[0, n] = s
    C[n, n] = -s
    C.setflags(write=False)
    return C


@dataclass(frozen=True, eq=False)
class HermitianSpace:
    """A Hermitian form ``J`` of signature (1, n) on ``C^(n+1)``."""

    n: int
    J: np.ndarray = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise InputError("n must be a positive integer")
        J = _ball_form(self.n) if self.J is None else np.asarray(self.J, dtype=complex)
        if J.shape != (self.n + 1, self.n + 1):
            raise InputError(f"form must be {(self.n + 1, self.n + 1)}, got {J.shape}")
        if np.abs(J - J.conj().T).max() > TOL.hermitian_symmetry:
            raise InputError("form is not self-adjoint")
        ev = np.linalg.eigvalsh(J)
        if (ev > 0).sum() != 1 or (ev < 0).sum() != self.n:
            raise InputError("form does not have signature (1, n)")
        object.__setattr__(self, "J", J)

    @classmethod
    def ball(cls, n):
        return cls(n, _ball_form(n))

    @classmethod
    def siegel(cls, n):
        return cls(n, _siegel_form(n))


def ball_form(n):
    return _ball_form(n)


def siegel_form(n):
    return _siegel_form(n)


def _as_J(space, size):
    if space is None:
        return _ball_form(size - 1)
    if isinstance(space, HermitianSpace):
        return space.J
    return np.asarray(space, dtype=complex)


def form_eval(x, y, space=None):
    """Evaluate ``<x, y> = x* J y`` (conjugate-linear in ``x``).

    ``x`` and ``y`` broadcast against each other over leading axes.
    ``space`` is a :class:`HermitianSpace`, a raw matrix, or ``None`` for
    the ball form.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape[-1] != y.shape[-1]:
        raise InputError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    J = _as_J(space, x.shape[-1])
    if J.shape[0] != x.shape[-1]:
        raise InputError(f"vectors of length {x.shape[-1]} do not match form of size {J.shape[0]}")
    if np.array_equal(J, _ball_form(J.shape[0] - 1)):
        # diagonal fast path
        prod = x.conj() * y
        return prod[..., 0] - prod[..., 1:].sum(axis=-1)
    return np.einsum("...i,ij,...j->...", x.conj(), J, y)


def norm2(z):
    """Real quadratic form ``<z, z>`` in the ball model."""
    z = np.asarray(z, dtype=complex)
    a = np.abs(z) ** 2
    return a[..., 0] - a[..., 1:].sum(axis=-1)


# ---------------------------------------------------------------------------
# points

def canonical_boundary(z):
    """Canonical representative of null lines: unit norm, ``z_0 > 0``.

    In the ball model a null vector always has ``z_0 != 0``, so the first
    nonzero coordinate is the first one.
    """
    z = np.asarray(z, dtype=complex)
    phase = z[..., :1] / np.abs(z[..., :1])
    z = z / phase
    z = z / np.linalg.norm(z, axis=-1, keepdims=True)
    return np.concatenate([z[..., :1].real + 0j, z[..., 1:]], axis=-1)


def canonical_interior(z):
    """Canonical representative of positive lines: ``<z, z> = 1``, ``z_0 > 0``."""
    z = np.asarray(z, dtype=complex)
    q = norm2(z)
    if np.any(q <= 0):
        raise DomainError("vector is not an interior (positive) vector")
    phase = z[..., :1] / np.abs(z[..., :1])
    z = z / phase / np.sqrt(q)[..., None]
    return np.concatenate([z[..., :1].real + 0j, z[..., 1:]], axis=-1)


def is_null(z, tol=None):
    tol = TOL.null_vector if tol is None else tol
    z = np.asarray(z, dtype=complex)
    return np.abs(norm2(z)) <= tol * np.sum(np.abs(z) ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    """A point of the sphere at infinity, stored as a canonical null vector."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 1 or z.size < 3:
            raise InputError("boundary point needs a vector of length n + 1 >= 3")
        if not np.any(z):
            raise DomainError("zero vector is not a projective point")
        if not is_null(z):
            raise DomainError(f"vector is not null: <z,z> = {norm2(z):.3e}")
        # already canonical vectors are kept bit for bit (serialisation round trips)
        if not (z[0].imag == 0 and z[0].real > 0 and abs(np.linalg.norm(z) - 1.0) <= 4e-16):
            z = canonical_boundary(z)
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self):
        return self.z.size - 1

    @classmethod
    def from_ball(cls, w):
        """Point with ball-chart coordinate ``w`` (``|w| = 1``)."""
        w = np.asarray(w, dtype=complex)
        return cls(np.concatenate([[1.0], w / np.linalg.norm(w)]))

    @property
    def ball_coords(self):
        return self.z[1:] / self.z[0]

    def __eq__(self, other):
        if not isinstance(other, BoundaryPoint):
            return NotImplemented
        return self.z.shape == other.z.shape and np.allclose(
            self.z, other.z, rtol=0, atol=TOL.projective_equal)

    __hash__ = None

    def __repr__(self):
        return f"BoundaryPoint({np.array2string(self.z, precision=6)})"


@dataclass(frozen=True, eq=False)
class HPoint:
    """A point of complex hyperbolic space: canonical vector with ``<z,z> = 1``."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=complex)
        if z.ndim != 1 or z.size < 2:
            raise InputError("interior point needs a vector of length n + 1")
        z = canonical_interior(z)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self):
        return self.z.size - 1

    @classmethod
    def origin(cls, n):
        return cls(np.eye(n + 1, dtype=complex)[0])

    @classmethod
    def from_ball(cls, w):
        """Point with ball-chart coordinate ``w`` (``|w| < 1``)."""
        return cls(np.concatenate([[1.0], np.asarray(w, dtype=complex)]))

    def __eq__(self, other):
        if not isinstance(other, HPoint):
            return NotImplemented
        return np.allclose(self.z, other.z, rtol=0, atol=TOL.projective_equal)

    __hash__ = None

    def __repr__(self):
        return f"HPoint({np.array2string(self.z, precision=6)})"


# ---------------------------------------------------------------------------
# isometries

def isometry_residual(m, J=None):
    """Scaled form residual ``|m* J m - J|_max / max(1, |m|_2^2)``.

    Scaling by ``|m|^2`` makes the number meaningful for strongly
    hyperbolic matrices whose entries are far from unit size.
    """
    m = np.asarray(m, dtype=complex)
    J = _ball_form(m.shape[-1] - 1) if J is None else J
    res = np.abs(m.conj().T @ J @ m - J).max()
    return res / max(1.0, np.linalg.norm(m, 2) ** 2)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of U(1, n) in the ball model, taken up to scalars.

    ``check=False`` skips validation; internal code uses it for products of
    already-validated elements.
    """

    m: np.ndarray
    check: bool = field(default=True, repr=False)
    _kind: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InputError("group element must be a square matrix of size n + 1 >= 2")
        if self.check:
            res = isometry_residual(m)
            if res > 10 * TOL.determinant:
                raise InputError(f"matrix does not preserve the form (residual {res:.2e})")
            if abs(abs(np.linalg.det(m)) - 1.0) > TOL.determinant * max(1.0, np.linalg.norm(m, 2)) ** 2:
                raise InputError("determinant does not have modulus 1")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def n(self):
        return self.m.shape[0] - 1

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n + 1, dtype=complex), check=False)

    def __matmul__(self, other):
        if isinstance(other, GroupElement):
            return GroupElement(self.m @ other.m, check=False)
        return NotImplemented

    def inverse(self):
        J = _ball_form(self.n)
        return GroupElement(J @ self.m.conj().T @ J, check=False)

    def power(self, k):
        if k < 0:
            return self.inverse().power(-k)
        out = np.eye(self.n + 1, dtype=complex)
        base = self.m
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return GroupElement(out, check=False)

    def conjugate_by(self, h):
        """``h g h^-1``."""
        return h @ self @ h.inverse()

    @property
    def kind(self):
        if not self._kind:
            self._kind.append(classify(self))
        return self._kind[0]

    def projectively_close(self, other, tol=1e-9):
        """Equality in PU(1, n): ``self = c * other`` for a unit scalar ``c``."""
        a, b = self.m, other.m
        idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
        if abs(a[idx]) == 0:
            return False
        c = a[idx] / b[idx]
        return np.abs(a - c * b).max() <= tol * max(1.0, np.abs(a).max())


def normalize_isometry(g, tol_in=None):
    """Project a nearly-isometric matrix back onto U(1, n).

    Uses the Newton iteration ``X <- X (3I - J X* J X) / 2`` which converges
    quadratically for matrices close to the group and leaves exact
    isometries fixed up to rounding.

    Raises
    ------
    ConditioningError
        if the scaled residual of the input exceeds ``tol_in`` (default
        1e-4), or the iteration fails to reach 1e-12.
    """
    tol_in = TOL.isometry_input if tol_in is None else tol_in
    m = np.array(g.m if isinstance(g, GroupElement) else g, dtype=complex)
    J = _ball_form(m.shape[0] - 1)
    res = isometry_residual(m, J)
    if not np.isfinite(res) or res > tol_in:
        raise ConditioningError(f"isometry residual {res:.2e} exceeds {tol_in:.0e}")
    eye = np.eye(m.shape[0])
    for _ in range(30):
        if res <= 1e-15:
            break
        m = 0.5 * m @ (3 * eye - J @ m.conj().T @ J @ m)
        new = isometry_residual(m, J)
        if new >= res:
            break
        res = new
    if res > TOL.isometry_output:
        raise ConditioningError(f"renormalisation stalled at residual {res:.2e}")
    return GroupElement(m, check=False)


def _hyperbolic_eigs(m, tol):
    """Indices of genuinely expanding/contracting eigenvalues of ``m``.

    A parabolic Jordan block is split by rounding into a cluster of radius
    about ``eps^(1/k)``, far above ``tol``; such eigenvalues have a vanishing
    left/right eigenvector overlap, which is what filters them out here.
    """
    try:
        w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigen-solver failed: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(vr))):
        raise NumericError("eigen-solver returned non-finite values")
    overlap = np.abs(np.sum(vl.conj() * vr, axis=0)) / (
        np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0))
    genuine = (np.abs(np.abs(w) - 1.0) > tol) & (overlap > 1e-6)
    return w, vr, genuine


def classify(g, tol=None):
    """Isometry type: ``"hyperbolic"``, ``"elliptic"`` or ``"parabolic"``.

    Hyperbolic when some well-conditioned eigenvalue has modulus above
    ``1 + tol``.  Otherwise the element is elliptic exactly when it fixes an
    interior point, i.e. some eigenspace contains a positive vector
    (equivalent to diagonalisability with unit spectrum in U(1, n)).
    """
    tol = TOL.classify if tol is None else tol
    m = g.m if isinstance(g, GroupElement) else np.asarray(g, dtype=complex)
    # scale out the U(1) factor so that |det| = 1 exactly
    m = m / abs(np.linalg.det(m)) ** (1.0 / m.shape[0])
    w, _, genuine = _hyperbolic_eigs(m, tol)
    if np.any(genuine & (np.abs(w) > 1.0)):
        return HYPERBOLIC
    J = _ball_form(m.shape[0] - 1)
    scale = max(1.0, np.linalg.norm(m, 2))
    for lam in w:
        _, s, vh = np.linalg.svd(m - lam * np.eye(m.shape[0]))
        null = vh[s <= TOL.eigenspace_rank * scale].conj().T
        if null.shape[1] == 0:
            continue
        gram = null.conj().T @ J @ null
        if np.linalg.eigvalsh(0.5 * (gram + gram.conj().T)).max() > tol:
            return ELLIPTIC
    return PARABOLIC


def fixed_boundary_points(g):
    """Attracting and repelling fixed points of a hyperbolic element.

    Returns
    -------
    (BoundaryPoint, BoundaryPoint)
        eigenlines of the largest- and smallest-modulus eigenvalues.
    """
    if classify(g) != HYPERBOLIC:
        raise DomainError("fixed_boundary_points needs a hyperbolic element")
    w, v, _ = _hyperbolic_eigs(g.m, TOL.classify)
    order = np.argsort(np.abs(w))
    attracting = v[:, order[-1]]
    repelling = v[:, order[0]]
    return BoundaryPoint(attracting), BoundaryPoint(repelling)


class TranslationLength(NamedTuple):
    value: float
    history: np.ndarray  # d(o, g^j o) / j for j = 1..k


def translation_length(g, o=None, k=16):
    """Estimate the translation length as ``d(o, g^k o) / k``.

    The orbit is generated by repeated application to a vector (no matrix
    powers are formed), so long iterations stay well conditioned.
    """
    if k < 8:
        raise InputError("translation_length needs k >= 8")
    if classify(g) != HYPERBOLIC:
        raise DomainError("translation_length needs a hyperbolic element")
    o = HPoint.origin(g.n) if o is None else o
    z0 = o.z
    z = z0.copy()
    log_scale = 0.0
    hist = np.empty(k)
    for j in range(1, k + 1):
        # g preserves <z, z> = 1; only rescale against overflow
        z = g.m @ z
        big = np.abs(z).max()
        if not np.isfinite(big):
            raise ConditioningError("orbit overflowed")
        z = z / big
        log_scale += np.log(big)
        hist[j - 1] = arccosh_log(np.log(abs(form_eval(z0, z))) + log_scale) / j
    return TranslationLength(float(hist[-1]), hist)


def arccosh_log(log_c):
    """``arccosh(exp(log_c))`` without overflow for large arguments."""
    log_c = np.asarray(log_c, dtype=float)
    small = log_c < 20.0
    c = np.exp(np.where(small, log_c, 0.0))
    out = np.where(small, np.arccosh(np.maximum(c, 1.0)),
                   log_c + np.log(2.0) + np.log1p(-0.25 * np.exp(-2.0 * np.where(small, 20.0, log_c))))
    return out if out.ndim else float(out)
