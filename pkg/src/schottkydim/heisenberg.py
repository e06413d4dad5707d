"""Heisenberg group ``C^(n-1) x R``, its metrics, dilations and chains.

Horizontal coordinates are complex; the identification with
``R^(2(n-1))`` interleaves ``(Re v_1, Im v_1, Re v_2, ...)``.  With that
identification the symplectic form ``sum x_{2i-1} y_{2i} - x_{2i} y_{2i-1}``
is ``Im(conj(v) . w)``, and the group law is

    (v, s) . (w, t) = (v + w, s + t + omega(v, w)).

The array-level helpers (``group_mul``, ``gauge``, ...) take a horizontal
array of shape ``(..., n-1)`` and a vertical array of shape ``(...)``;
:class:`HeisPoint` wraps a single point for the scalar API.
"""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import DomainError, InputError
from .hermitian import BoundaryPoint, canonical_boundary


@dataclass(frozen=True, eq=False)
class HeisPoint:
    """A point ``(v, t)`` of the Heisenberg group, or the point at infinity."""

    v: np.ndarray = None
    t: float = 0.0
    infinite: bool = False

    def __post_init__(self):
        if self.infinite:
            object.__setattr__(self, "v", None)
            return
        v = np.atleast_1d(np.asarray(self.v, dtype=complex))
        if v.ndim != 1:
            raise InputError("horizontal part must be a vector")
        if not (np.all(np.isfinite(v)) and np.isfinite(self.t)):
            raise InputError("finite Heisenberg points need finite coordinates")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def infinity(cls):
        return cls(infinite=True)

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim, dtype=complex), 0.0)

    def _finite(self):
        if self.infinite:
            raise DomainError("the point at infinity has no group structure or metric")
        return self.v, self.t

    def __eq__(self, other):
        if not isinstance(other, HeisPoint):
            return NotImplemented
        if self.infinite or other.infinite:
            return self.infinite and other.infinite
        return (self.v.shape == other.v.shape and np.allclose(self.v, other.v, rtol=0, atol=1e-12)
                and abs(self.t - other.t) <= 1e-12)

    __hash__ = None

    def __repr__(self):
        if self.infinite:
            return "HeisPoint(inf)"
        return f"HeisPoint(v={np.array2string(self.v, precision=6)}, t={self.t:.6g})"


# ---------------------------------------------------------------------------
# array-level operations

def omega(v, w):
    """Symplectic form ``Im(conj(v) . w)`` summed over the last axis."""
    return np.imag(np.sum(np.conj(v) * w, axis=-1))


def group_mul(v, s, w, t):
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return v + w, np.asarray(s) + np.asarray(t) + omega(v, w)


def group_inv(v, s):
    # omega(v, -v) = 0, so the inverse is plain negation
    return -np.asarray(v, dtype=complex), -np.asarray(s, dtype=float)


def gauge(v, t):
    """Heisenberg pseudo-norm ``(|v|^4 + t^2)^(1/4)``."""
    r2 = np.sum(np.abs(v) ** 2, axis=-1)
    return (r2 * r2 + np.asarray(t) ** 2) ** 0.25


def gauge_dist(v1, t1, v2, t2):
    """Right-invariant distance ``|a . b^-1|_H``."""
    w, t = group_mul(v1, t1, *group_inv(v2, t2))
    return gauge(w, t)


def real_coords(v, t):
    """Interleaved real coordinates in ``R^(2n-1)``: ``(Re v1, Im v1, ..., t)``."""
    v = np.asarray(v, dtype=complex)
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1] + 1,))
    out[..., 0:-1:2] = v.real
    out[..., 1:-1:2] = v.imag
    out[..., -1] = t
    return out


def from_real_coords(x):
    x = np.asarray(x, dtype=float)
    v = x[..., 0:-1:2] + 1j * x[..., 1:-1:2]
    return v, x[..., -1]


def euclid(v1, t1, v2, t2):
    dv = np.sum(np.abs(np.asarray(v1) - np.asarray(v2)) ** 2, axis=-1)
    return np.sqrt(dv + (np.asarray(t1) - np.asarray(t2)) ** 2)


def dilation(lam, v, t):
    if lam == 0:
        raise DomainError("dilation factor must be nonzero")
    return lam * np.asarray(v, dtype=complex), abs(lam) ** 2 * np.asarray(t, dtype=float)


# ---------------------------------------------------------------------------
# scalar API

def heis_mul(a, b):
    v, t = group_mul(*a._finite(), *b._finite())
    return HeisPoint(v, float(t))


def heis_inv(a):
    v, t = group_inv(*a._finite())
    return HeisPoint(v, float(t))


def heis_norm(a):
    return float(gauge(*a._finite()))


def heis_dist(a, b):
    return float(gauge_dist(*a._finite(), *b._finite()))


def euclid_dist(a, b):
    return float(euclid(*a._finite(), *b._finite()))


def dilate(lam, a):
    v, t = dilation(lam, *a._finite())
    return HeisPoint(v, float(t))


def project_vertical(a):
    """Image in ``N/Z``: the horizontal part ``v``."""
    return a._finite()[0].copy()


# ---------------------------------------------------------------------------
# chains

@dataclass(frozen=True, eq=False)
class Chain:
    """The chain through two distinct boundary points (canonically ordered)."""

    p: BoundaryPoint
    q: BoundaryPoint

    @property
    def n(self):
        return self.p.n

    def ball_circle(self):
        """Centre, radius and complex direction of the chain in the ball chart.

        The chain is the round circle ``{m + rho * e^{i phi} * u}`` cut out of
        the unit sphere by the complex line through the two points.
        """
        return chain_circles(self.p.z[None], self.q.z[None])

    def __repr__(self):
        return f"Chain({self.p!r}, {self.q!r})"


def chain_through(p, q):
    """The unique chain through two distinct boundary points."""
    if p == q:
        raise DomainError("a chain needs two distinct points")
    key = lambda b: tuple(np.round(np.r_[b.z.real, b.z.imag], 12))
    if key(q) < key(p):
        p, q = q, p
    return Chain(p, q)


def chain_residual_vectors(P, Q, X):
    """Smallest singular value of the stacked unit representatives.

    Zero exactly when ``X`` lies in the complex span of ``P`` and ``Q``,
    i.e. on their chain.  Broadcasts over leading axes.
    """
    P, Q, X = (np.asarray(a, dtype=complex) for a in (P, Q, X))
    P, Q, X = np.broadcast_arrays(P, Q, X)
    M = np.stack([a / np.linalg.norm(a, axis=-1, keepdims=True) for a in (P, Q, X)], axis=-2)
    return np.linalg.svd(M, compute_uv=False)[..., -1]


def chain_residual(c, x):
    return float(chain_residual_vectors(c.p.z, c.q.z, x.z))


def point_on_chain(c, x, tol=None):
    """Algebraic membership test: rank of ``[p; q; x]`` is at most 2."""
    tol = TOL.chain_membership if tol is None else tol
    return chain_residual(c, x) <= tol


def chain_circles(P, Q):
    """Ball-chart circles of the chains through rows of ``P`` and ``Q``.

    Returns ``(m, rho, u)``: centres in ``C^n``, radii, and unit complex
    directions of the complex lines.
    """
    P = canonical_boundary(P)
    Q = canonical_boundary(Q)
    wp = P[..., 1:] / P[..., :1]
    wq = Q[..., 1:] / Q[..., :1]
    d = wq - wp
    u = d / np.linalg.norm(d, axis=-1, keepdims=True)
    m = wp - np.sum(np.conj(u) * wp, axis=-1, keepdims=True) * u
    rho = np.sqrt(np.clip(1.0 - np.sum(np.abs(m) ** 2, axis=-1), 0.0, None))
    return m, rho, u


def distance_to_circles(c, m, rho, u):
    """Euclidean (chordal) distance from points ``c`` to chain circles.

    ``c`` lives in ``C^n`` (ball chart); everything broadcasts.
    """
    d = np.asarray(c) - m
    a = np.abs(np.sum(np.conj(u) * d, axis=-1))
    perp = np.clip(np.sum(np.abs(d) ** 2, axis=-1) - a ** 2, 0.0, None)
    return np.sqrt(perp + (a - rho) ** 2)


def chain_param_n2(s0, theta, n=2):
    """Explicit parametrisation of the chain through ``(0, s0)`` and ``(1, 0)``.

    For ``n = 2`` the chain is the left translate by ``(v0, s0)`` of the
    horizontal circle ``{|v| = |v0|, t = 0}``, where ``v0 = 1/2 + i s0``:

        v(theta) = v0 + |v0| e^{i theta}
        s(theta) = s0 + Im(conj(v0) v(theta)).

    ``theta`` may be an array, in which case arrays ``(v, s)`` are returned
    with ``v`` of shape ``theta.shape + (1,)``.
    """
    if n != 2:
        raise DomainError("the explicit chain parametrisation exists for n = 2 only")
    v0 = 0.5 + 1j * float(s0)
    th = np.asarray(theta, dtype=float)
    v = v0 + abs(v0) * np.exp(1j * th)
    s = float(s0) + np.imag(np.conj(v0) * v)
    if th.ndim == 0:
        return HeisPoint(np.array([complex(v)]), float(s))
    return v[..., None], s


def chain_param_theta_at(s0, v_target):
    """Angle at which :func:`chain_param_n2` passes over horizontal point ``v_target``."""
    v0 = 0.5 + 1j * float(s0)
    return float(np.angle((v_target - v0) / abs(v0)))
