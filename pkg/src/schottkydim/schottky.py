"""Schottky groups in good position: construction, verification, enumeration.

A Schottky system is a set of hyperbolic generators ``w_1..w_k`` with
ping-pong domains: for every letter ``w`` (a generator or an inverse) a
spherical ball ``B(w)`` around its attracting fixed point, such that

1. no generator is the inverse of another,
2. the closed balls are pairwise disjoint,
3. ``w`` maps the complement of ``B(w^-1)`` into ``B(w)``,
4. no chain meets three of the balls.

Conditions 3 and 4 are checked by sampling at an explicit resolution and
margin.  A passing report certifies the numeric check, not a proof.

Letters are stored as indices ``j = 0..2k-1``: ``j = 2i`` is generator
``i`` and ``j = 2i + 1`` its inverse, so the inverse of ``j`` is ``j ^ 1``.
Words are enumerated by length, then lexicographically in letter index;
the public signed codes are ``+(i+1)`` and ``-(i+1)``.
"""

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.stats import norm, qmc

from . import __version__
from .errors import ConditioningError, ConstructionError, DomainError, InputError
from .heisenberg import chain_circles, distance_to_circles
from .hermitian import (
    BoundaryPoint,
    GroupElement,
    HPoint,
    arccosh_log,
    ball_form,
    canonical_boundary,
    fixed_boundary_points,
    form_eval,
)
from .hyperbolic import IwasawaFrame, a_matrix, spherical_dist_vectors

# ---------------------------------------------------------------------------
# letters and words


def letter_code(j):
    """Signed generator code of letter index ``j``."""
    return (j // 2 + 1) * (1 if j % 2 == 0 else -1)


def letter_index(code):
    if code == 0:
        raise InputError("0 is not a letter")
    return 2 * (abs(code) - 1) + (0 if code > 0 else 1)


@dataclass(frozen=True)
class Word:
    """A word in the generators, as signed codes (``-2`` is ``w_2^-1``)."""

    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(c) for c in self.letters))
        if any(c == 0 for c in self.letters):
            raise InputError("0 is not a letter")

    @property
    def reduced(self):
        return all(a != -b for a, b in zip(self.letters, self.letters[1:]))

    def __len__(self):
        return len(self.letters)

    def inverse(self):
        return Word(tuple(-c for c in reversed(self.letters)))

    def indices(self):
        return np.array([letter_index(c) for c in self.letters], dtype=np.int64)

    def __repr__(self):
        return "Word(" + " ".join(f"{c:+d}" for c in self.letters) + ")"


def word_count(k, L):
    """Number of reduced words of length ``<= L`` in a free group of rank ``k``."""
    return 1 + sum(2 * k * (2 * k - 1) ** (l - 1) for l in range(1, L + 1))


class Level(NamedTuple):
    """Reduced words of one length, in lexicographic order.

    ``words[i] = (first[i],) + previous.words[parent[i]]``.
    """

    words: np.ndarray
    first: np.ndarray
    parent: np.ndarray


def word_levels(k, L):
    """Lists of :class:`Level` for lengths ``1..L`` (index 0 is length 1)."""
    levels = []
    prev = None
    for ell in range(1, L + 1):
        if prev is None:
            first = np.arange(2 * k)
            parent = np.zeros(2 * k, dtype=np.int64)
            words = first[:, None].astype(np.int8)
        else:
            parents = [np.nonzero(prev.first != (a ^ 1))[0] for a in range(2 * k)]
            parent = np.concatenate(parents)
            first = np.concatenate([np.full(p.size, a) for a, p in enumerate(parents)])
            words = np.concatenate([first[:, None].astype(np.int8), prev.words[parent]], axis=1)
        prev = Level(words, first, parent)
        levels.append(prev)
    return levels


def reduced_words(S, L):
    """All reduced words of length ``<= L``: the identity, then by length and lex order."""
    if L < 0:
        raise InputError("word length must be nonnegative")
    k = S.k if isinstance(S, SchottkyDescriptor) else int(S)
    yield Word(())
    for level in word_levels(k, L):
        for row in level.words:
            yield Word(tuple(letter_code(int(j)) for j in row))


# ---------------------------------------------------------------------------
# spheres, balls and quasi-uniform samples


def _to_real(w):
    return np.concatenate([w.real, w.imag], axis=-1)


def _to_complex(x):
    h = x.shape[-1] // 2
    return x[..., :h] + 1j * x[..., h:]


def _null_from_ball(w):
    w = np.asarray(w, dtype=complex)
    w = w / np.linalg.norm(w, axis=-1, keepdims=True)
    return canonical_boundary(np.concatenate([np.ones(w.shape[:-1] + (1,)), w], axis=-1))


@lru_cache(maxsize=32)
def _halton(dim, count):
    # the first unscrambled Halton point is the origin; skip it
    u = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    u.setflags(write=False)
    return u


def sphere_points(n, count):
    """Quasi-uniform points of ``S^(2n-1)`` as canonical null vectors.

    Built from the unscrambled Halton sequence, so the first ``count``
    points of a longer request are exactly the shorter request.
    """
    x = norm.ppf(_halton(2 * n, count))
    return _null_from_ball(_to_complex(x))


def chordal_to_angle(r):
    return 2.0 * np.arcsin(np.clip(np.asarray(r) / 2.0, 0.0, 1.0))


def angle_to_chordal(theta):
    return 2.0 * np.sin(np.asarray(theta) / 2.0)


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed spherical cap: points within chordal distance ``radius`` of ``center``."""

    center: BoundaryPoint
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < 2.0:
            raise InputError("ball radius must lie in (0, 2)")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def angle(self):
        return float(chordal_to_angle(self.radius))

    def contains_vectors(self, Z, margin=0.0):
        return spherical_dist_vectors(self.center.z, Z) <= self.radius - margin

    def samples(self, count, boundary_only=False):
        """Deterministic points of the ball, prefix-consistent in ``count``.

        The sequence is the centre, then alternately a point of the
        boundary sphere and an interior point (or boundary points only).
        """
        n = self.center.n
        dim = 2 * n
        c = _to_real(self.center.ball_coords)
        # orthonormal basis of the tangent space at c
        q, _ = np.linalg.qr(np.column_stack([c, np.eye(dim)]))
        tangent = q[:, 1:dim]
        need = count if boundary_only else count // 2 + 1
        u = _halton(dim, max(need, 1))
        dirs = norm.ppf(u[:, : dim - 1]) @ tangent.T
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        theta_r = self.angle
        if boundary_only:
            theta = np.full(need, theta_r)
        else:
            frac = u[:, dim - 1] ** (1.0 / (dim - 1))
            theta = np.stack([np.full(need, theta_r), theta_r * frac], axis=1).ravel()
            dirs = np.repeat(dirs, 2, axis=0)
        pts = np.cos(theta)[:, None] * c + np.sin(theta)[:, None] * dirs
        if boundary_only:
            pts = pts[:count]
        else:
            pts = np.concatenate([c[None], pts])[:count]
        return _null_from_ball(_to_complex(pts))

    def to_dict(self):
        return {"center": _hex_vector(self.center.z), "radius": float.hex(self.radius)}

    @classmethod
    def from_dict(cls, d):
        return cls(BoundaryPoint(_unhex_vector(d["center"])), float.fromhex(d["radius"]))

    def __repr__(self):
        return f"Ball(center={np.array2string(self.center.ball_coords, precision=4)}, radius={self.radius:.4g})"


def enclosing_ball(Z, safety=1.1, iterations=200):
    """Small chordal cap containing the null vectors ``Z`` (rows).

    Badoiu-Clarkson iterations give an approximate minimal enclosing ball
    in the ambient ``R^(2n)``; the centre is pushed to the sphere and the
    radius is the exact maximum distance times ``safety``.  Works on stacks
    ``(..., m, n+1)``.
    """
    x = _to_real(np.asarray(Z)[..., 1:] / np.asarray(Z)[..., :1])
    c = x[..., 0, :].copy()
    for i in range(1, iterations + 1):
        d = np.linalg.norm(x - c[..., None, :], axis=-1)
        far = np.take_along_axis(x, np.argmax(d, axis=-1)[..., None, None], axis=-2)[..., 0, :]
        c += (far - c) / (i + 1)
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    r = np.linalg.norm(x - c[..., None, :], axis=-1).max(axis=-1)
    return _null_from_ball(_to_complex(c)), safety * r


# ---------------------------------------------------------------------------
# the descriptor


@dataclass(frozen=True)
class BuildParams:
    """Parameters of :func:`build_good_position`.

    ``t0`` is the translation length of the unpowered generators,
    ``separation`` the chordal margin by which no chain through two fixed
    points may approach a third, ``min_distance`` the minimal chordal
    distance between fixed points.  ``radius_fraction`` times the smallest
    fixed-point distance is the largest domain radius tried; radii shrink by
    ``radius_shrink`` until the chain condition holds.
    """

    t0: float = 1.0
    separation: float = 0.1
    min_distance: float = 0.5
    radius_fraction: float = 0.45
    radius_shrink: float = 0.85
    min_radius: float = 1e-3
    power_cap: int = 64
    resolution: int = 64
    pingpong_resolution: int = 4096
    margin: float = 0.01
    max_tries: int = 10000
    shared_chain: bool = False

    def __post_init__(self):
        if not self.t0 > 0:
            raise InputError("t0 must be positive")
        if self.power_cap < 1 or self.resolution < 1 or self.pingpong_resolution < 1:
            raise InputError("power cap and resolutions must be positive")
        if not 0 < self.radius_shrink < 1:
            raise InputError("radius_shrink must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SchottkyDescriptor:
    """Generators, ping-pong domains and the verification record."""

    gens: tuple
    domains: dict
    verification: dict = field(default_factory=dict)
    seed: int = None
    params: dict = field(default_factory=dict)
    version: str = __version__

    def __post_init__(self):
        gens = tuple(self.gens)
        if len(gens) < 2:
            raise InputError("a Schottky system needs k >= 2 generators")
        n = gens[0].n
        if any(g.n != n for g in gens):
            raise InputError("generators act on different dimensions")
        object.__setattr__(self, "gens", gens)
        if self.domains:
            missing = {letter_code(j) for j in range(2 * len(gens))} - set(self.domains)
            if missing:
                raise InputError(f"domains missing for letters {sorted(missing)}")

    @property
    def k(self):
        return len(self.gens)

    @property
    def n(self):
        return self.gens[0].n

    def letter(self, code):
        g = self.gens[abs(code) - 1]
        return g if code > 0 else g.inverse()

    @property
    def letter_matrices(self):
        """Stack of letter matrices indexed by letter index."""
        return np.stack([self.letter(letter_code(j)).m for j in range(2 * self.k)])

    def domain_list(self):
        return [self.domains[letter_code(j)] for j in range(2 * self.k)]

    def word_matrix(self, word):
        m = np.eye(self.n + 1, dtype=complex)
        for c in word.letters:
            m = m @ self.letter(c).m
        return GroupElement(m, check=False)

    @property
    def verified(self):
        return bool(self.verification.get("passed", False))

    # serialisation -------------------------------------------------------

    def to_dict(self):
        return {
            "format": "schottkydim-descriptor",
            "format_version": 1,
            "library_version": self.version,
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "params": self.params,
            "generators": [_hex_matrix(g.m) for g in self.gens],
            "domains": [
                {"letter": code, **self.domains[code].to_dict()}
                for code in sorted(self.domains, key=letter_index)
            ],
            "verification": self.verification,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "schottkydim-descriptor":
            raise InputError("not a Schottky descriptor document")
        gens = [GroupElement(_unhex_matrix(m)) for m in d["generators"]]
        domains = {int(e["letter"]): Ball.from_dict(e) for e in d["domains"]}
        return cls(tuple(gens), domains, d.get("verification", {}), d.get("seed"),
                   d.get("params", {}), d.get("library_version", __version__))

    @classmethod
    def loads(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"descriptor is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())

    def __eq__(self, other):
        if not isinstance(other, SchottkyDescriptor):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _hex_matrix(m):
    return [[[float.hex(float(x.real)), float.hex(float(x.imag))] for x in row] for row in np.asarray(m)]


def _unhex_matrix(rows):
    return np.array([[complex(float.fromhex(a), float.fromhex(b)) for a, b in row] for row in rows])


def _hex_vector(z):
    return [[float.hex(float(x.real)), float.hex(float(x.imag))] for x in z]


def _unhex_vector(entries):
    return np.array([complex(float.fromhex(a), float.fromhex(b)) for a, b in entries])


# ---------------------------------------------------------------------------
# verification


@dataclass
class Report:
    """Outcome of a sampled verification.

    ``margin`` is the smallest observed slack (positive means satisfied);
    ``witness`` describes the worst case when the check fails.
    """

    passed: bool
    margin: float
    resolution: int
    details: dict = field(default_factory=dict)
    witness: dict = None

    def to_dict(self):
        return asdict(self)


def _map_jobs(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def verify_ping_pong(S, resolution=4096, margin=0.0, jobs=1):
    """Check conditions 1-3 by sampling.

    Condition 3 maps ``resolution`` quasi-uniform points of the sphere that
    lie outside ``B(w^-1)``, together with the boundary spheres of every
    domain, and requires the images to sit inside ``B(w)`` with slack.
    """
    k = S.k
    balls = S.domain_list()
    mats = S.letter_matrices

    # condition 1: no generator is (projectively) the inverse of another
    cond1 = True
    for i, j in itertools.combinations(range(k), 2):
        if S.gens[i].projectively_close(S.gens[j].inverse()) or S.gens[i].projectively_close(S.gens[j]):
            cond1 = False

    # condition 2: closed caps pairwise disjoint (angles add along great circles)
    sep = []
    pairs = list(itertools.combinations(range(2 * k), 2))
    for a, b in pairs:
        ang = float(chordal_to_angle(spherical_dist_vectors(balls[a].center.z, balls[b].center.z)))
        sep.append(ang - balls[a].angle - balls[b].angle)
    worst2 = int(np.argmin(sep))
    cond2 = sep[worst2]

    ring = max(16, resolution // 8)
    rings = np.concatenate([b.samples(ring, boundary_only=True) for b in balls])
    cloud = sphere_points(S.n, resolution)

    def check(j):
        outside = ~balls[j ^ 1].contains_vectors(cloud)
        pts = np.concatenate([cloud[outside], rings])
        img = canonical_boundary(pts @ mats[j].T)
        d = spherical_dist_vectors(balls[j].center.z, img)
        i = int(np.argmax(d))
        return balls[j].radius - d[i], pts[i]

    results = _map_jobs(check, range(2 * k), jobs)
    slack3 = [r[0] for r in results]
    worst3 = int(np.argmin(slack3))
    m3 = float(slack3[worst3])
    passed = cond1 and cond2 > 0 and m3 > margin
    witness = None
    if not passed:
        if not cond1:
            witness = {"condition": 1}
        elif cond2 <= 0:
            a, b = pairs[worst2]
            witness = {"condition": 2, "letters": [letter_code(a), letter_code(b)], "overlap": -cond2}
        else:
            witness = {"condition": 3, "letter": letter_code(worst3),
                       "point": _hex_vector(results[worst3][1]), "slack": m3}
    details = {
        "condition_1": cond1,
        "condition_2_margin": float(cond2),
        "condition_3_margin": m3,
        "condition_3_margin_by_letter": {str(letter_code(j)): float(s) for j, s in enumerate(slack3)},
    }
    return Report(bool(passed), min(float(cond2), m3), int(resolution), details, witness)


def verify_no_triple_chain(S, resolution=64, margin=0.01, jobs=1):
    """Check condition 4: chains through two domains stay away from a third.

    For every unordered triple of domains and every choice of the third,
    chains through all pairs of sample points of the first two (``resolution``
    samples each, centres and boundary spheres included) are compared with
    the third ball.  The clearance of a chain from a ball is the chordal
    distance from the ball's centre to the chain's circle minus the radius,
    a lower bound for the true chordal gap.  The check is a semidecision:
    more samples or a larger margin can only turn a pass into a fail.
    """
    balls = S.domain_list()
    samples = [b.samples(resolution) for b in balls]
    cases = [(a, b, c) for a, b, c in itertools.permutations(range(len(balls)), 3) if a < b]

    def check(case):
        a, b, c = case
        P = np.repeat(samples[a], len(samples[b]), axis=0)
        Q = np.tile(samples[b], (len(samples[a]), 1))
        m, rho, u = chain_circles(P, Q)
        center = balls[c].center.ball_coords
        gap = distance_to_circles(center, m, rho, u) - balls[c].radius
        i = int(np.argmin(gap))
        return float(gap[i]), P[i], Q[i]

    results = _map_jobs(check, cases, jobs)
    gaps = [r[0] for r in results]
    worst = int(np.argmin(gaps))
    clearance = gaps[worst]
    passed = clearance > margin
    witness = None
    if not passed:
        a, b, c = cases[worst]
        witness = {"condition": 4, "letters": [letter_code(a), letter_code(b), letter_code(c)],
                   "chain": [_hex_vector(results[worst][1]), _hex_vector(results[worst][2])],
                   "clearance": clearance}
    details = {"clearance": clearance, "margin": float(margin), "triples": len(cases) // 3}
    return Report(bool(passed), clearance, int(resolution), details, witness)


# ---------------------------------------------------------------------------
# construction


def frame_for_pair(attracting, repelling):
    """Iwasawa frame with ``xi_- = attracting`` and ``xi_+ = repelling``.

    Then ``a_matrix(t, frame)`` for ``t > 0`` is hyperbolic with exactly these
    attracting and repelling fixed points.
    """
    P = np.asarray(attracting, dtype=complex)
    Q = np.asarray(repelling, dtype=complex)
    n = P.size - 1
    J = ball_form(n)
    ip = form_eval(Q, P)
    if abs(ip) < 1e-12:
        raise DomainError("fixed points must be distinct")
    Q = Q / np.conj(ip)
    # orthogonal complement of span(P, Q), made orthonormal for -J
    _, _, vh = np.linalg.svd(np.stack([P.conj() @ J, Q.conj() @ J]))
    N = vh[2:].conj().T
    G = -(N.conj().T @ J @ N)
    w, v = np.linalg.eigh(0.5 * (G + G.conj().T))
    N = N @ v @ np.diag(w ** -0.5) @ v.conj().T
    return IwasawaFrame(np.column_stack([Q, N, P]))


def _triple_clearance(Z):
    """Smallest distance from a point to the chain through two others."""
    best = np.inf
    for a, b, c in itertools.permutations(range(len(Z)), 3):
        if a < b:
            m, rho, u = chain_circles(Z[a][None], Z[b][None])
            best = min(best, float(distance_to_circles(Z[c, 1:] / Z[c, 0], m, rho, u)[0]))
    return best


def _sample_fixed_points(rng, n, k, params):
    from .hyperbolic import random_boundary_points

    for _ in range(params.max_tries):
        Z = random_boundary_points(rng, n, 2 * k)
        d = spherical_dist_vectors(Z[:, None], Z[None])
        if d[np.triu_indices(2 * k, 1)].min() < params.min_distance:
            continue
        if _triple_clearance(Z) < params.separation:
            continue
        return Z
    raise ConstructionError("could not sample well-separated fixed points",
                            {"tries": params.max_tries})


def _shared_chain_points(rng, n, k):
    """``2k`` distinct points on one chain, evenly spread along it."""
    from .hyperbolic import random_boundary_points

    Z = random_boundary_points(rng, n, 2)
    m, rho, u = chain_circles(Z[:1], Z[1:])
    m, rho, u = m[0], rho[0], u[0]
    phase0 = np.angle(np.vdot(u, Z[0, 1:] / Z[0, 0] - m))
    phases = phase0 + 2 * np.pi * np.arange(2 * k) / (2 * k)
    w = m + rho * np.exp(1j * phases)[:, None] * u
    # attracting/repelling interleaved so generator i gets points 2i, 2i+1
    return _null_from_ball(w)


def _assemble(Z, t0, power, radius, n, k):
    gens = []
    domains = {}
    for i in range(k):
        base = a_matrix(t0, frame_for_pair(Z[2 * i], Z[2 * i + 1]))
        gens.append(base.power(power))
        domains[i + 1] = Ball(BoundaryPoint(Z[2 * i]), radius)
        domains[-(i + 1)] = Ball(BoundaryPoint(Z[2 * i + 1]), radius)
    return gens, domains


def build_good_position(k=2, seed=0, params=None, n=2, jobs=1):
    """Construct a Schottky system in good position.

    Fixed points of the base generators ``c_i a_t0 c_i^-1`` are sampled
    (seeded) until every chain through two of them clears the others by
    ``params.separation``.  Domain radii start at ``radius_fraction`` of the
    smallest fixed-point distance and shrink until the chain condition is
    verified; then the power ``m = 1, 2, 4, ...`` is doubled until the
    ping-pong conditions are verified.

    Raises
    ------
    ConstructionError
        when the power exceeds ``params.power_cap`` or no radius passes the
        chain condition; ``diagnostics`` holds the last reports.
    """
    params = BuildParams() if params is None else params
    if k < 2 or n < 2:
        raise InputError("need k >= 2 generators and n >= 2")
    rng = np.random.default_rng(seed)
    Z = _shared_chain_points(rng, n, k) if params.shared_chain else _sample_fixed_points(rng, n, k, params)
    d = spherical_dist_vectors(Z[:, None], Z[None])
    radius = params.radius_fraction * d[np.triu_indices(2 * k, 1)].min()

    chain_report = None
    while radius >= params.min_radius:
        gens, domains = _assemble(Z, params.t0, 1, radius, n, k)
        S = SchottkyDescriptor(tuple(gens), domains)
        chain_report = verify_no_triple_chain(S, params.resolution, params.margin, jobs)
        if chain_report.passed:
            break
        radius *= params.radius_shrink
    else:
        raise ConstructionError("no domain radius satisfies the chain condition",
                                {"condition_4": chain_report.to_dict(), "radius": radius})

    power = 1
    pp_report = None
    while power <= params.power_cap:
        gens, domains = _assemble(Z, params.t0, power, radius, n, k)
        S = SchottkyDescriptor(tuple(gens), domains)
        pp_report = verify_ping_pong(S, params.pingpong_resolution, 0.0, jobs)
        if pp_report.passed:
            break
        power *= 2
    else:
        raise ConstructionError(f"ping-pong not verified up to power {params.power_cap}",
                                {"conditions_1_3": pp_report.to_dict(), "radius": radius})

    verification = {
        "passed": True,
        "power": power,
        "radius": radius,
        "conditions_1_3": pp_report.to_dict(),
        "condition_4": chain_report.to_dict(),
    }
    return SchottkyDescriptor(tuple(gens), domains, verification, int(seed), asdict(params))


def shared_chain_system(k=2, seed=0, params=None, n=2, power=4, radius=None):
    """Negative control: all fixed points on one chain, no verification gate.

    Conditions 1-3 can hold, but the common chain meets every domain.
    """
    params = BuildParams() if params is None else params
    rng = np.random.default_rng(seed)
    Z = _shared_chain_points(rng, n, k)
    if radius is None:
        d = spherical_dist_vectors(Z[:, None], Z[None])
        radius = params.radius_fraction * d[np.triu_indices(2 * k, 1)].min()
    gens, domains = _assemble(Z, params.t0, power, radius, n, k)
    return SchottkyDescriptor(tuple(gens), domains, {"passed": False}, int(seed),
                              asdict(replace(params, shared_chain=True)))


def verify(S, resolution=None, margin=None, jobs=1):
    """Run both verifiers; returns the verification record for ``S``."""
    params = S.params or {}
    res = resolution or params.get("resolution", 64)
    mar = params.get("margin", 0.01) if margin is None else margin
    pp = verify_ping_pong(S, params.get("pingpong_resolution", 4096), 0.0, jobs)
    ch = verify_no_triple_chain(S, res, mar, jobs)
    return {"passed": pp.passed and ch.passed, "conditions_1_3": pp.to_dict(), "condition_4": ch.to_dict()}


# ---------------------------------------------------------------------------
# enumeration over words


def _apply_letters(mats, words, X, reverse=True):
    """Apply each row's word to the matching row of ``X`` (vectors as rows).

    Words act on the left, so the last letter is applied first.  Vectors are
    rescaled to unit Euclidean norm after every letter.  Negative entries
    are skipped.
    """
    X = X.copy()
    cols = range(words.shape[1] - 1, -1, -1) if reverse else range(words.shape[1])
    for c in cols:
        col = words[:, c]
        for a in range(len(mats)):
            rows = col == a
            if rows.any():
                X[rows] = X[rows] @ mats[a].T
        X /= np.linalg.norm(X, axis=-1, keepdims=True)
    return X


def _letter_fixed_points(S):
    """Attracting fixed point of every letter (indexed by letter index)."""
    out = []
    for i in range(S.k):
        att, rep = fixed_boundary_points(S.gens[i])
        out.extend([att.z, rep.z])
    return np.stack(out)


def word_fixed_points(S, words, iterations=4, tol=1e-9, max_iterations=64):
    """Attracting fixed points of the words (rows of letter indices).

    Power iteration on vectors, started at the attracting point of each
    word's first letter: ``iterations`` sweeps over all words, then further
    sweeps over the rows whose last step moved more than ``tol`` (words
    like ``a b a^-1`` contract only as fast as their cyclic core).
    Returns ``(Z, unconverged_mask)``.
    """
    mats = S.letter_matrices
    X = _letter_fixed_points(S)[words[:, 0]]
    prev = X
    for _ in range(iterations):
        prev = X
        X = _apply_letters(mats, words, X)
    X = canonical_boundary(X)
    change = spherical_dist_vectors(canonical_boundary(prev), X)
    for _ in range(iterations, max_iterations):
        rows = np.nonzero(change > tol)[0]
        if rows.size == 0:
            break
        new = canonical_boundary(_apply_letters(mats, words[rows], X[rows]))
        change[rows] = spherical_dist_vectors(X[rows], new)
        X[rows] = new
    return X, change > tol


def word_domain(S, word, samples=64, safety=1.1):
    """Enclosing ball of ``B(f) = f_1 ... f_(p-1) B(f_p)``.

    The boundary sphere of ``B(f_p)`` is sampled, pushed through the prefix,
    and enclosed by a chordal cap dilated by ``safety``.
    """
    if len(word) == 0:
        raise InputError("word_domain needs a nonempty word")
    if not word.reduced:
        raise InputError("word_domain needs a reduced word")
    idx = word.indices()
    last = S.domains[word.letters[-1]]
    pts = last.samples(samples, boundary_only=True)
    prefix = np.broadcast_to(idx[:-1], (pts.shape[0], idx.size - 1))
    pts = canonical_boundary(_apply_letters(S.letter_matrices, prefix, pts))
    c, r = enclosing_ball(pts, safety)
    if not np.isfinite(r):
        raise ConditioningError("enclosing ball is not finite")
    return Ball(BoundaryPoint(c), float(min(r, 1.999)))


def _domain_centers(S, words, samples=24):
    """Centres of :func:`word_domain` for many words at once."""
    mats = S.letter_matrices
    balls = S.domain_list()
    rings = np.stack([b.samples(samples, boundary_only=True) for b in balls])
    pts = rings[words[:, -1]]  # (W, samples, n+1)
    W, m, d = pts.shape
    prefix = np.repeat(words[:, :-1], m, axis=0)
    pts = canonical_boundary(_apply_letters(mats, prefix, pts.reshape(W * m, d))).reshape(W, m, d)
    c, _ = enclosing_ball(pts, 1.0, iterations=100)
    return c


LIMIT_MODES = ("word-fixed-points", "nested-centers", "orbit-of-point")


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Boundary points as canonical null vectors (rows of ``Z``).

    ``words`` holds the letter indices of the generating word of each row
    (or is empty for clouds not built from words).
    """

    Z: np.ndarray
    words: np.ndarray = None
    mode: str = ""
    L: int = 0
    seed: int = None
    skipped: int = 0

    def __post_init__(self):
        Z = canonical_boundary(np.asarray(self.Z, dtype=complex))
        Z.setflags(write=False)
        object.__setattr__(self, "Z", Z)

    def __len__(self):
        return self.Z.shape[0]

    @property
    def n(self):
        return self.Z.shape[1] - 1

    @property
    def points(self):
        return [BoundaryPoint(z) for z in self.Z]

    @property
    def ball(self):
        """Spherical chart coordinates ``w`` with ``|w| = 1``."""
        return self.Z[:, 1:] / self.Z[:, :1]


def limit_points(S, L, mode="word-fixed-points"):
    """Sample the limit set from the reduced words of length exactly ``L``.

    Modes: attracting fixed points of the words; centres of the nested
    domains ``B(f)``; or the orbit of the attracting point of the first
    generator.  Words whose computation does not converge are dropped and
    counted in ``skipped``.
    """
    if mode not in LIMIT_MODES:
        raise InputError(f"unknown mode {mode!r}; expected one of {LIMIT_MODES}")
    if L < 1:
        raise InputError("limit_points needs L >= 1")
    words = word_levels(S.k, L)[-1].words.astype(np.int64)
    skipped = 0
    if mode == "word-fixed-points":
        Z, bad = word_fixed_points(S, words)
        if L == 1:
            Z, bad = _letter_fixed_points(S), np.zeros(len(words), dtype=bool)
        skipped = int(bad.sum())
        Z, words = Z[~bad], words[~bad]
    elif mode == "nested-centers":
        Z = _domain_centers(S, words)
    else:
        # trailing letters w_1^(+-1) fix xi0, and w_1^-1 repels from it:
        # skip them rather than amplify rounding
        xi0 = _letter_fixed_points(S)[0]
        trailing = np.cumprod((words[:, ::-1] >> 1) == 0, axis=1)[:, ::-1].astype(bool)
        Z = canonical_boundary(_apply_letters(S.letter_matrices, np.where(trailing, -1, words),
                                              np.tile(xi0, (len(words), 1))))
    finite = np.all(np.isfinite(Z), axis=-1)
    skipped += int((~finite).sum())
    return PointCloud(Z[finite], words[finite], mode, L, S.seed, skipped)


class OrbitDistances(NamedTuple):
    """``d(o, g o)`` for reduced words in enumeration order, with word lengths."""

    distances: np.ndarray
    lengths: np.ndarray


def orbit_distances(S, L, o=None):
    """Distances ``d(o, g o)`` for all reduced words of length ``<= L``.

    Orbit vectors are built letter by letter (``g = a g'``), rescaled each
    step with the logarithm of the scale tracked separately; since the
    form is preserved, ``cosh d = |<o, g o>|`` for ``<o, o> = 1``.
    """
    if L < 0:
        raise InputError("word length must be nonnegative")
    o = HPoint.origin(S.n) if o is None else o
    mats = S.letter_matrices
    out = [np.zeros(1)]
    lengths = [np.zeros(1, dtype=np.int64)]
    prev_X = o.z[None]
    prev_log = np.zeros(1)
    for ell, level in enumerate(word_levels(S.k, L), start=1):
        X = prev_X[level.parent].copy() if ell > 1 else np.tile(o.z, (level.words.shape[0], 1))
        logs = prev_log[level.parent].copy() if ell > 1 else np.zeros(level.words.shape[0])
        for a in range(len(mats)):
            rows = level.first == a
            X[rows] = X[rows] @ mats[a].T
        scale = np.abs(X).max(axis=-1)
        X /= scale[:, None]
        logs += np.log(scale)
        c = np.abs(form_eval(o.z, X))
        out.append(arccosh_log(np.log(c) + logs))
        lengths.append(np.full(X.shape[0], ell, dtype=np.int64))
        prev_X, prev_log = X, logs
    d = np.concatenate(out)
    if not np.all(np.isfinite(d)):
        raise ConditioningError("orbit distances are not finite")
    return OrbitDistances(d, np.concatenate(lengths))
