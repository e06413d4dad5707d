"""Complex hyperbolic space, its boundary, and the boundary metrics.

Distance convention: ``cosh^2 d(x, y) = <X,Y><Y,X> / (<X,X><Y,Y>)``, the
normalisation with sectional curvature in [-4, -1].  Under it Busemann
functions are ``log|<Xi,X>| - log|<Xi,Y>| + log(<Y,Y>/<X,X>)/2``, the
Gromov metric ``exp(-(b_xi + b_eta)/2)`` is locally comparable to the
Heisenberg gauge metric, and the Cartan element ``a_t`` translates its
axis by exactly ``t`` while conjugating ``N`` by the dilation ``h_{e^t}``.

Iwasawa data live on an :class:`IwasawaFrame`, which stores the matrix
taking Siegel coordinates to ball coordinates.  In Siegel coordinates

    n(v, t) = [[1, conj(v)^T, |v|^2/2 + i t],
               [0, I,         v           ],
               [0, 0,         1           ]]
    a_t     = diag(e^-t, 1, ..., 1, e^t)

so ``n`` fixes ``xi_+ = e_0``, ``a_t`` fixes ``e_0`` and ``xi_- = e_n``, and
``n(v, t) . xi_- = (|v|^2/2 + i t, v, 1)`` is the Heisenberg chart.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .errors import DomainError, InputError
from .heisenberg import HeisPoint
from .hermitian import (
    BoundaryPoint,
    GroupElement,
    HPoint,
    ball_form,
    canonical_boundary,
    cayley_matrix,
    form_eval,
    norm2,
    siegel_form,
)


@dataclass(frozen=True, eq=False)
class IwasawaFrame:
    """Iwasawa data: a Siegel-to-ball change of basis ``C``.

    ``C`` must satisfy ``C* J_ball C = J_siegel``.  The standard frame uses
    :func:`cayley_matrix`; :meth:`moved` transports a frame by an isometry.
    """

    C: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=complex)
        n = C.shape[0] - 1
        if np.abs(C.conj().T @ ball_form(n) @ C - siegel_form(n)).max() > 1e-10 * max(1.0, np.abs(C).max() ** 2):
            raise InputError("frame matrix does not carry the ball form to the Siegel form")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Cinv", siegel_form(n) @ C.conj().T @ ball_form(n))

    @property
    def n(self):
        return self.C.shape[0] - 1

    @classmethod
    def standard(cls, n):
        return cls(cayley_matrix(n))

    def moved(self, g):
        """Frame transported by the isometry ``g``."""
        return IwasawaFrame(g.m @ self.C)

    @classmethod
    def with_infinity_at(cls, xi):
        """Frame whose ``xi_+`` is ``xi``, obtained by a rotation about the origin.

        Base point stays the ball origin; ``xi_-`` is the antipode of ``xi``.
        """
        n = xi.n
        w = xi.ball_coords
        target = np.eye(n, dtype=complex)[-1]
        # unitary U with U e_n = w: Householder-type reflection then phase fix
        U = _unitary_sending(target, w)
        R = np.eye(n + 1, dtype=complex)
        R[1:, 1:] = U
        return cls(R @ cayley_matrix(n))

    @property
    def xi_plus(self):
        return BoundaryPoint(self.C[:, 0])

    @property
    def xi_minus(self):
        return BoundaryPoint(self.C[:, self.n])

    @property
    def o(self):
        e = np.zeros(self.n + 1, dtype=complex)
        e[0] = e[self.n] = 1.0 / np.sqrt(2.0)
        return HPoint(self.C @ e)


@dataclass(frozen=True, eq=False)
class GromovMetricTag:
    """Gromov metric seen from the interior point ``x``."""

    x: HPoint


@dataclass(frozen=True)
class SphericalMetricTag:
    """Chordal metric of the ball-model sphere (the only chart implemented)."""

    chart: str = "ball-chordal"


def _unitary_sending(a, b):
    """A unitary matrix mapping unit vector ``a`` to unit vector ``b``."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    phase = np.vdot(a, b)
    if abs(phase) > 1e-15:
        b_adj = b * np.conj(phase) / abs(phase)
    else:
        b_adj = b
    d = a - b_adj
    if np.linalg.norm(d) < 1e-15:
        H = np.eye(a.size, dtype=complex)
    else:
        d = d / np.linalg.norm(d)
        H = np.eye(a.size, dtype=complex) - 2.0 * np.outer(d, d.conj())
    # H a = b_adj; restore the phase
    if abs(phase) > 1e-15:
        H = H * (phase / abs(phase))
    return H


# ---------------------------------------------------------------------------
# Iwasawa matrices and the Heisenberg chart

def _n_siegel(v, t, n):
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if v.shape != (n - 1,):
        raise InputError(f"horizontal part must have length {n - 1}")
    M = np.eye(n + 1, dtype=complex)
    M[0, 1:n] = v.conj()
    M[1:n, n] = v
    M[0, n] = 0.5 * np.sum(np.abs(v) ** 2) + 1j * t
    return M


def n_matrix(h, frame):
    """Isometry of the Heisenberg element ``h`` (``N`` acting in ``frame``)."""
    if not isinstance(h, HeisPoint):
        h = HeisPoint(*h)
    v, t = h._finite()
    return GroupElement(frame.C @ _n_siegel(v, t, frame.n) @ frame.Cinv, check=False)


def a_matrix(t, frame):
    """Cartan element ``a_t``; ``a_{-t} n(h) a_t = n(h_{e^t} h)``."""
    n = frame.n
    d = np.ones(n + 1, dtype=complex)
    d[0] = np.exp(-t)
    d[n] = np.exp(t)
    return GroupElement(frame.C @ np.diag(d) @ frame.Cinv, check=False)


def heis_to_vectors(v, t, frame):
    """Ball-model null vectors ``n(v, t) . xi_-`` for arrays of Heisenberg points."""
    v = np.asarray(v, dtype=complex)
    t = np.asarray(t, dtype=float)
    n = frame.n
    S = np.empty(v.shape[:-1] + (n + 1,), dtype=complex)
    S[..., 0] = 0.5 * np.sum(np.abs(v) ** 2, axis=-1) + 1j * t
    S[..., 1:n] = v
    S[..., n] = 1.0
    return canonical_boundary(S @ frame.C.T)


def vectors_to_heis(Z, frame, rtol=1e-12):
    """Heisenberg coordinates ``(v, t)`` of boundary vectors (rows of ``Z``).

    Raises
    ------
    DomainError
        if a point is (numerically) the frame's ``xi_+``.
    """
    Z = np.asarray(Z, dtype=complex)
    S = Z @ frame.Cinv.T
    last = S[..., frame.n]
    if np.any(np.abs(last) <= rtol * np.linalg.norm(S, axis=-1)):
        raise DomainError("point at xi_+ has no finite Heisenberg coordinates")
    S = S / last[..., None]
    return S[..., 1:frame.n], S[..., 0].imag


def phi_chart(g, frame, h):
    """``phi_g(h) = g . n(h) . xi_-``; the point at infinity goes to ``g . xi_+``."""
    if isinstance(h, HeisPoint) and h.infinite:
        return boundary_act(g, frame.xi_plus)
    if not isinstance(h, HeisPoint):
        h = HeisPoint(*h)
    z = (g.m @ n_matrix(h, frame).m) @ frame.C[:, frame.n]
    return BoundaryPoint(z)


def phi_chart_inv(g, frame, xi):
    """Inverse of :func:`phi_chart` on the complement of ``g . xi_+``."""
    z = g.inverse().m @ xi.z
    v, t = vectors_to_heis(z, frame)
    return HeisPoint(v, float(t))


# ---------------------------------------------------------------------------
# distances

def _vec(p):
    return p.z if isinstance(p, (HPoint, BoundaryPoint)) else np.asarray(p, dtype=complex)


def dist_vectors(X, Y):
    """Hyperbolic distance between stacks of positive vectors.

    Uses ``sinh^2 d = -<Y', Y'> / <Y, Y>`` with ``Y'`` the component of
    ``Y`` orthogonal to ``X``, which keeps full relative accuracy for
    nearby points where ``arccosh`` would lose half the digits.
    """
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    xx = norm2(X)
    yy = norm2(Y)
    if np.any(xx <= 0) or np.any(yy <= 0):
        raise DomainError("distance needs interior (positive) points")
    xy = form_eval(X, Y)
    Yp = Y - (xy / xx)[..., None] * X
    s2 = np.clip(-norm2(Yp) / yy, 0.0, None)
    return np.arcsinh(np.sqrt(s2))


def dist(x, y):
    return float(dist_vectors(_vec(x), _vec(y)))


def busemann_vectors(Xi, X, Y):
    """Closed-form Busemann cocycle ``b_xi(x, y)``, broadcasting."""
    Xi, X, Y = (np.asarray(a, dtype=complex) for a in (Xi, X, Y))
    return (np.log(np.abs(form_eval(Xi, X))) - np.log(np.abs(form_eval(Xi, Y)))
            + 0.5 * np.log(norm2(Y) / norm2(X)))


def busemann(xi, x, y):
    """``b_xi(x, y) = lim d(x, xi_t) - d(y, xi_t)``."""
    if not isinstance(xi, BoundaryPoint):
        xi = BoundaryPoint(xi)
    return float(busemann_vectors(xi.z, _vec(x), _vec(y)))


def geodesic_vectors(Xi, Eta, s):
    """Points ``e^-s Xi' + e^s Eta'`` with ``<Xi', Eta'> = 1/2``; unit speed."""
    Xi = np.asarray(Xi, dtype=complex)
    Eta = np.asarray(Eta, dtype=complex)
    ip = form_eval(Xi, Eta)
    if np.any(np.abs(ip) <= 1e-14 * np.linalg.norm(Xi, axis=-1) * np.linalg.norm(Eta, axis=-1)):
        raise DomainError("geodesic needs two distinct boundary points")
    # Xi' = Xi / sqrt(2r), Eta' = e^{-i phi} Eta / sqrt(2r) for ip = r e^{i phi}:
    # symmetric in the two ends, so swapping them only reverses s (up to a phase)
    r = np.abs(ip)
    scale = 1.0 / np.sqrt(2.0 * r)
    s = np.asarray(s, dtype=float)
    return scale[..., None] * (np.exp(-s)[..., None] * Xi
                               + np.exp(s)[..., None] * (np.conj(ip) / r)[..., None] * Eta)


def geodesic_point(xi, eta, s):
    if xi == eta:
        raise DomainError("geodesic needs two distinct boundary points")
    return HPoint(geodesic_vectors(xi.z, eta.z, s))


def gromov_dist(x, xi, eta):
    """Gromov metric ``d_x(xi, eta) = exp(-(b_xi(x,p) + b_eta(x,p)) / 2)``.

    ``p`` is the midpoint ``geodesic_point(xi, eta, 0)``; any other point of
    the geodesic gives the same value.
    """
    if xi == eta:
        raise DomainError("Gromov distance of a point to itself is undefined; use gromov_dist_total")
    p = geodesic_point(xi, eta, 0.0)
    return float(np.exp(-0.5 * (busemann(xi, x, p) + busemann(eta, x, p))))


def gromov_dist_total(x, xi, eta):
    return 0.0 if xi == eta else gromov_dist(x, xi, eta)


def gromov_dist_vectors(X, Xi, Eta):
    """Closed form of the Gromov metric for stacks of vectors.

    ``d_x(xi, eta)^2 = |<Xi,Eta>| <X,X> / (2 |<Xi,X>| |<Eta,X>|)``,
    algebraically equal to :func:`gromov_dist`; returns 0 on the diagonal.
    """
    X, Xi, Eta = (np.asarray(a, dtype=complex) for a in (X, Xi, Eta))
    num = np.abs(form_eval(Xi, Eta)) * norm2(X)
    den = 2.0 * np.abs(form_eval(Xi, X)) * np.abs(form_eval(Eta, X))
    return np.sqrt(num / den)


def spherical_dist_vectors(Xi, Eta):
    """Chordal distance between ball-chart coordinates of null vectors."""
    Xi = np.asarray(Xi, dtype=complex)
    Eta = np.asarray(Eta, dtype=complex)
    w1 = Xi[..., 1:] / Xi[..., :1]
    w2 = Eta[..., 1:] / Eta[..., :1]
    return np.linalg.norm(w1 - w2, axis=-1)


def spherical_dist(xi, eta):
    return float(spherical_dist_vectors(xi.z, eta.z))


def ball_coords(Z):
    """Ball-chart coordinates ``w = z[1:]/z[0]`` (unit vectors for null ``z``)."""
    Z = np.asarray(Z, dtype=complex)
    return Z[..., 1:] / Z[..., :1]


# ---------------------------------------------------------------------------
# actions

def act_vectors(m, Z):
    """Apply matrix ``m`` to rows of ``Z`` and re-canonicalise as null vectors."""
    return canonical_boundary(np.asarray(Z, dtype=complex) @ np.asarray(m).T)


def boundary_act(g, xi):
    return BoundaryPoint(g.m @ xi.z)


def interior_act(g, x):
    return HPoint(g.m @ x.z)


def random_isometry(rng, n, max_t=1.5):
    """Random element ``U1 a_t U2`` with Haar-random rotations about the origin."""
    rs = np.random.RandomState(rng.integers(2 ** 31))
    frame = IwasawaFrame.standard(n)

    def rot():
        R = np.eye(n + 1, dtype=complex)
        R[0, 0] = np.exp(2j * np.pi * rng.random())
        R[1:, 1:] = unitary_group.rvs(n, random_state=rs) if n > 1 else np.exp(2j * np.pi * rng.random())
        return GroupElement(R, check=False)

    t = rng.uniform(-max_t, max_t)
    return rot() @ a_matrix(t, frame) @ rot()


def random_boundary_points(rng, n, size):
    """Uniform points of the unit sphere ``S^(2n-1)`` as canonical null vectors."""
    g = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    w = g / np.linalg.norm(g, axis=-1, keepdims=True)
    return canonical_boundary(np.concatenate([np.ones((size, 1)), w], axis=-1))


def random_interior_points(rng, n, size, max_radius=0.95):
    g = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    g = g / np.linalg.norm(g, axis=-1, keepdims=True)
    r = max_radius * rng.random(size) ** (1.0 / (2 * n))
    Z = np.concatenate([np.ones((size, 1)), g * r[:, None]], axis=-1)
    return Z / np.sqrt(norm2(Z))[:, None]
