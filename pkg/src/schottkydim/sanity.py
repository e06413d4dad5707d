"""Fixed-seed invariant battery for the geometry modules.

Each check returns its worst observed residual together with the bound it
must stay under; :func:`run_battery` collects them in a fixed order.
"""

from typing import NamedTuple

import numpy as np

from .heisenberg import (
    HeisPoint,
    chain_param_n2,
    chain_residual_vectors,
    dilation,
    euclid,
    gauge_dist,
    group_inv,
    group_mul,
    omega,
)
from .hermitian import (
    classify,
    fixed_boundary_points,
    form_eval,
    normalize_isometry,
    norm2,
)
from .hyperbolic import (
    IwasawaFrame,
    a_matrix,
    busemann_vectors,
    dist_vectors,
    geodesic_vectors,
    gromov_dist_vectors,
    heis_to_vectors,
    n_matrix,
    random_boundary_points,
    random_interior_points,
    random_isometry,
)


class Check(NamedTuple):
    name: str
    value: float
    bound: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.bound)


def _heis(rng, size, dim=1):
    v = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
    return v, rng.standard_normal(size)


def heisenberg_axioms(rng, size=10000):
    a, b, c = _heis(rng, size), _heis(rng, size), _heis(rng, size)
    left = group_mul(*group_mul(*a, *b), *c)
    right = group_mul(*a, *group_mul(*b, *c))
    assoc = max(np.abs(left[0] - right[0]).max(), np.abs(left[1] - right[1]).max())
    inv = group_mul(*a, *group_inv(*a))
    inverse = max(np.abs(inv[0]).max(), np.abs(inv[1]).max())
    anti = np.abs(omega(a[0], b[0]) + omega(b[0], a[0])).max()
    return Check("heisenberg.group_axioms", float(max(assoc, inverse, anti)), 1e-13)


def right_invariance(rng, size=10000):
    a, b, c = _heis(rng, size), _heis(rng, size), _heis(rng, size)
    ac = group_mul(*a, *c)
    bc = group_mul(*b, *c)
    d0 = gauge_dist(*a, *b)
    return Check("heisenberg.right_invariance", float(np.abs(gauge_dist(*ac, *bc) - d0).max() / max(1, d0.max())), 1e-13)


def dilation_ratio(rng, size=10000, lam=0.5 + 0.2j):
    a, b = _heis(rng, size), _heis(rng, size)
    ratio = gauge_dist(*dilation(lam, *a), *dilation(lam, *b)) / gauge_dist(*a, *b)
    return Check("heisenberg.dilation_similarity", float(np.abs(ratio - abs(lam)).max()), 1e-13)


def fiber_identity(rng, size=10000):
    v, t = _heis(rng, size)
    s = t + rng.standard_normal(size)
    dE = euclid(v, t, v, s)
    dH = gauge_dist(v, t, v, s)
    return Check("heisenberg.fiber_identity", float(np.abs(dE - dH ** 2).max()), 1e-12)


def compact_band(rng, size=100000):
    v1 = rng.uniform(-1, 1, (size, 1)) + 1j * rng.uniform(-1, 1, (size, 1))
    v2 = rng.uniform(-1, 1, (size, 1)) + 1j * rng.uniform(-1, 1, (size, 1))
    keep = (np.abs(v1[:, 0]) <= 1) & (np.abs(v2[:, 0]) <= 1)
    t1, t2 = rng.uniform(-1, 1, size), rng.uniform(-1, 1, size)
    dE = euclid(v1, t1, v2, t2)[keep]
    dH = gauge_dist(v1, t1, v2, t2)[keep]
    C = max(np.max(dH ** 2 / dE), np.max(dE / dH))
    return Check("heisenberg.compact_band_constant", float(C), 10.0)


def quotient_metric(rng, pairs=20, offsets=1001):
    # inf over the fibre of b of d_H and of d_E against the horizontal gap
    from scipy.optimize import minimize_scalar

    worst = 0.0
    for _ in range(pairs):
        (v1, t1), (v2, t2) = _heis(rng, 1), _heis(rng, 1)
        # the fibre minimiser lies within |omega(v1, v2)| of t1
        reach = float(np.abs(v1).max() * np.abs(v2).max()) + 1.0
        grid = float(t1[0] - t2[0]) + np.linspace(-reach, reach, offsets)
        gap = float(np.linalg.norm(v1 - v2))
        for metric in (gauge_dist, euclid):
            def f(u):
                return float(metric(v1, t1, v2, t2 + u)[0])

            best = grid[np.argmin([f(u) for u in grid])]
            step = grid[1] - grid[0]
            res = minimize_scalar(f, bounds=(best - step, best + step), method="bounded",
                                  options={"xatol": 1e-12})
            worst = max(worst, abs(res.fun - gap))
    return Check("heisenberg.quotient_metric", worst, 1e-6)


def form_symmetry(rng, size=1000, n=2):
    x = rng.standard_normal((size, n + 1)) + 1j * rng.standard_normal((size, n + 1))
    y = rng.standard_normal((size, n + 1)) + 1j * rng.standard_normal((size, n + 1))
    return Check("hermitian.conjugate_symmetry", float(np.abs(form_eval(x, y) - np.conj(form_eval(y, x))).max()), 1e-13)


def renormalisation(rng, trials=100, n=2):
    worst = 0.0
    for _ in range(trials):
        g = random_isometry(rng, n) @ random_isometry(rng, n)
        worst = max(worst, float(np.abs(normalize_isometry(g).m - g.m).max() / np.abs(g.m).max()))
    return Check("hermitian.normalize_idempotent", worst, 1e-12)


def classify_conjugation(rng, trials=100, n=2):
    frame = IwasawaFrame.standard(n)
    base = [a_matrix(1.0, frame), n_matrix(HeisPoint(np.ones(n - 1), 0.5), frame)]
    bad = 0
    for _ in range(trials):
        h = random_isometry(rng, n)
        bad += sum(classify(g.conjugate_by(h)) != classify(g) for g in base)
    return Check("hermitian.classify_conjugation_invariant", float(bad), 0.0)


def fixed_points(rng, trials=100, n=2):
    frame = IwasawaFrame.standard(n)
    worst = 0.0
    for _ in range(trials):
        g = a_matrix(1.0, frame).conjugate_by(random_isometry(rng, n))
        for p in fixed_boundary_points(g):
            img = g.m @ p.z
            img = img / img[0] * abs(img[0])
            worst = max(worst, abs(norm2(p.z)), float(np.abs(img / np.linalg.norm(img) - p.z).max()))
    return Check("hermitian.fixed_points_null_and_fixed", worst, 1e-10)


def busemann_limit(rng, size=100, n=2, t=20.0):
    Xi = random_boundary_points(rng, n, size)
    X = random_interior_points(rng, n, size)
    Y = random_interior_points(rng, n, size)
    # xi_t marched towards xi; <P, P> = 1 exactly by construction, which
    # the computed vector cannot show at this distance from the origin
    other = random_boundary_points(rng, n, size)
    P = geodesic_vectors(other, Xi, np.full(size, t))
    oracle = (np.arccosh(np.abs(form_eval(X, P)) / np.sqrt(norm2(X)))
              - np.arccosh(np.abs(form_eval(Y, P)) / np.sqrt(norm2(Y))))
    return Check("hyperbolic.busemann_limit", float(np.abs(busemann_vectors(Xi, X, Y) - oracle).max()), 1e-6)


def gromov_conformality(rng, size=1000, n=2):
    X = random_interior_points(rng, n, size)
    Y = random_interior_points(rng, n, size)
    Xi = random_boundary_points(rng, n, size)
    Eta = random_boundary_points(rng, n, size)
    factor = np.exp(0.5 * (busemann_vectors(Xi, X, Y) + busemann_vectors(Eta, X, Y)))
    dy = gromov_dist_vectors(Y, Xi, Eta)
    dx = gromov_dist_vectors(X, Xi, Eta)
    return Check("hyperbolic.gromov_conformality", float(np.abs(dy - factor * dx).max()), 1e-9)


def gromov_equivariance(rng, trials=100, n=2):
    worst = 0.0
    for _ in range(trials):
        g = random_isometry(rng, n)
        X = random_interior_points(rng, n, 1)
        Xi, Eta = random_boundary_points(rng, n, 2)
        d0 = gromov_dist_vectors(X, Xi, Eta)
        d1 = gromov_dist_vectors(X @ g.m.T, Xi @ g.m.T, Eta @ g.m.T)
        worst = max(worst, float(np.abs(d1 - d0).max()))
    return Check("hyperbolic.gromov_equivariance", worst, 1e-9)


def unit_speed(rng, size=1000, n=2):
    Xi = random_boundary_points(rng, n, size)
    Eta = random_boundary_points(rng, n, size)
    s1 = rng.uniform(-2.5, 2.5, size)
    s2 = rng.uniform(-2.5, 2.5, size)
    d = dist_vectors(geodesic_vectors(Xi, Eta, s1), geodesic_vectors(Xi, Eta, s2))
    return Check("hyperbolic.geodesic_unit_speed", float(np.abs(d - np.abs(s1 - s2)).max()), 1e-9)


def iwasawa_conjugation(rng, trials=1000, n=2):
    frame = IwasawaFrame.standard(n)
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
        s, t = rng.standard_normal(), rng.uniform(-1, 1)
        lhs = a_matrix(-t, frame) @ n_matrix(HeisPoint(v, s), frame) @ a_matrix(t, frame)
        rhs = n_matrix(HeisPoint(*dilation(np.exp(t), v, s)), frame)
        worst = max(worst, float(np.abs(lhs.m - rhs.m).max()))
    return Check("hyperbolic.iwasawa_conjugation", worst, 1e-10)


def chain_parametrisation(rng, n=2):
    frame = IwasawaFrame.standard(n)
    worst = 0.0
    for s0 in (1.0, -0.6, 2.5):
        P = heis_to_vectors(np.zeros(1), s0, frame)
        Q = heis_to_vectors(np.ones(1), 0.0, frame)
        v, s = chain_param_n2(s0, np.linspace(0, 2 * np.pi, 64, endpoint=False))
        worst = max(worst, float(chain_residual_vectors(P, Q, heis_to_vectors(v, s, frame)).max()))
    return Check("heisenberg.chain_parametrisation", worst, 1e-8)


def vertical_line_chain(rng, n=2):
    frame = IwasawaFrame.standard(n)
    t = np.linspace(-50, 50, 101)
    Z = heis_to_vectors(np.zeros((t.size, n - 1)), t, frame)
    res = chain_residual_vectors(frame.xi_minus.z, frame.xi_plus.z, Z)
    return Check("hyperbolic.vertical_line_on_chain", float(res.max()), 1e-8)


BATTERY = (
    heisenberg_axioms,
    right_invariance,
    dilation_ratio,
    fiber_identity,
    compact_band,
    quotient_metric,
    form_symmetry,
    renormalisation,
    classify_conjugation,
    fixed_points,
    busemann_limit,
    gromov_conformality,
    gromov_equivariance,
    unit_speed,
    iwasawa_conjugation,
    chain_parametrisation,
    vertical_line_chain,
)


def run_battery(seed=0):
    """Run every check with its own generator derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).spawn(len(BATTERY))
    return [check(np.random.default_rng(s)) for check, s in zip(BATTERY, seeds)]
