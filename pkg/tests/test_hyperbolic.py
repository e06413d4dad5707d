import numpy as np
import pytest

from schottkydim.dimension import heisenberg_coords
from schottkydim.errors import DomainError
from schottkydim.heisenberg import HeisPoint, chain_residual_vectors, dilation, gauge_dist, group_mul
from schottkydim.hermitian import BoundaryPoint, GroupElement, HPoint, norm2
from schottkydim.hyperbolic import (
    IwasawaFrame,
    a_matrix,
    boundary_act,
    busemann,
    busemann_vectors,
    dist,
    dist_vectors,
    geodesic_point,
    geodesic_vectors,
    gromov_dist,
    gromov_dist_total,
    gromov_dist_vectors,
    heis_to_vectors,
    interior_act,
    n_matrix,
    phi_chart,
    phi_chart_inv,
    random_boundary_points,
    random_interior_points,
    random_isometry,
    spherical_dist,
    spherical_dist_vectors,
    vectors_to_heis,
)
from schottkydim.sanity import (
    busemann_limit,
    chain_parametrisation,
    gromov_conformality,
    gromov_equivariance,
    iwasawa_conjugation,
    unit_speed,
    vertical_line_chain,
)

FRAME = IwasawaFrame.standard(2)


def test_distance_normalisation():
    o = FRAME.o
    assert dist(o, interior_act(a_matrix(0.7, FRAME), o)) == pytest.approx(0.7, abs=1e-9)
    assert dist(o, interior_act(a_matrix(-2.5, FRAME), o)) == pytest.approx(2.5, abs=1e-9)
    assert dist(o, o) == 0


def test_distance_invariance_and_triangle(rng):
    X, Y, W = (random_interior_points(rng, 2, 100) for _ in range(3))
    d = dist_vectors(X, Y)
    for _ in range(100):
        g = random_isometry(rng, 2)
        assert np.abs(dist_vectors(X @ g.m.T, Y @ g.m.T) - d).max() <= 1e-10 * max(1, d.max())
    assert np.all(dist_vectors(X, Y) <= dist_vectors(X, W) + dist_vectors(W, Y) + 1e-9)
    assert np.allclose(dist_vectors(X, Y), dist_vectors(Y, X), atol=1e-14)


def test_distance_rejects_boundary(rng):
    with pytest.raises(DomainError):
        dist_vectors(random_boundary_points(rng, 2, 1), random_interior_points(rng, 2, 1))


def test_busemann_cocycle(rng):
    Xi = random_boundary_points(rng, 2, 1000)
    X, Y, W = (random_interior_points(rng, 2, 1000) for _ in range(3))
    assert np.abs(busemann_vectors(Xi, X, X)).max() == 0
    res = busemann_vectors(Xi, X, W) - busemann_vectors(Xi, X, Y) - busemann_vectors(Xi, Y, W)
    assert np.abs(res).max() <= 1e-12


def test_busemann_rejects_interior_xi(rng):
    with pytest.raises(DomainError):
        busemann(HPoint.origin(2).z, HPoint.origin(2), HPoint.origin(2))


def test_geodesic_examples(rng):
    xi, eta = (BoundaryPoint(z) for z in random_boundary_points(rng, 2, 2))
    # swapping the ends reverses the parameter
    assert dist(geodesic_point(xi, eta, 0.8), geodesic_point(eta, xi, -0.8)) <= 1e-7
    far = geodesic_point(xi, eta, 15.0)
    assert spherical_dist(BoundaryPoint(_null_part(far.z)), eta) <= 1e-6
    with pytest.raises(DomainError):
        geodesic_point(xi, xi, 0.0)


def _null_part(z):
    # the dominant term of e^-s Xi' + e^s H' at large s is proportional to H'
    w = z[1:] / z[0]
    return np.concatenate([[1.0], w / np.linalg.norm(w)])


def test_geodesic_is_interior(rng):
    P = geodesic_vectors(random_boundary_points(rng, 2, 100), random_boundary_points(rng, 2, 100),
                         rng.uniform(-5, 5, 100))
    assert np.all(norm2(P) > 0)


def test_gromov_symmetric_and_independent_of_midpoint(rng):
    x = HPoint(random_interior_points(rng, 2, 1)[0])
    for xi_z, eta_z in zip(random_boundary_points(rng, 2, 50), random_boundary_points(rng, 2, 50)):
        xi, eta = BoundaryPoint(xi_z), BoundaryPoint(eta_z)
        d = gromov_dist(x, xi, eta)
        assert abs(d - gromov_dist(x, eta, xi)) <= 1e-12
        for s in (-1.3, 0.4, 2.0):
            p = geodesic_point(xi, eta, s)
            alt = np.exp(-0.5 * (busemann(xi, x, p) + busemann(eta, x, p)))
            assert abs(alt - d) <= 1e-10
        assert abs(gromov_dist_vectors(x.z, xi.z, eta.z) - d) <= 1e-12
    with pytest.raises(DomainError):
        gromov_dist(x, xi, xi)
    assert gromov_dist_total(x, xi, xi) == 0


def test_spherical_examples(rng):
    w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    w /= np.linalg.norm(w)
    xi, anti = BoundaryPoint.from_ball(w), BoundaryPoint.from_ball(-w)
    assert spherical_dist(xi, xi) == 0
    assert spherical_dist(xi, anti) == pytest.approx(2.0, abs=1e-15)


def test_spherical_vs_gromov_band(rng):
    o = HPoint.origin(2).z
    A, B = random_boundary_points(rng, 2, 10000), random_boundary_points(rng, 2, 10000)
    dE = spherical_dist_vectors(A, B)
    dG = gromov_dist_vectors(o, A, B)
    C = max(np.max(dG ** 2 / dE), np.max(dE / dG))
    assert np.isfinite(C) and C <= 4


def test_boundary_action_law(rng):
    xi = BoundaryPoint(random_boundary_points(rng, 2, 1)[0])
    g, h = random_isometry(rng, 2), random_isometry(rng, 2)
    assert boundary_act(GroupElement.identity(2), xi) == xi
    assert boundary_act(g.inverse(), boundary_act(g, xi)) == xi
    lhs, rhs = boundary_act(g @ h, xi), boundary_act(g, boundary_act(h, xi))
    assert spherical_dist(lhs, rhs) <= 1e-11


def test_iterates_converge_to_attracting_point(rng):
    from schottkydim.hermitian import fixed_boundary_points

    g = a_matrix(1.0, FRAME).conjugate_by(random_isometry(rng, 2))
    att, _ = fixed_boundary_points(g)
    xi = BoundaryPoint(random_boundary_points(rng, 2, 1)[0])
    for _ in range(40):
        xi = boundary_act(g, xi)
    assert spherical_dist(xi, att) <= 1e-9


def test_n_matrix_homomorphism(rng):
    assert np.abs(n_matrix(HeisPoint.identity(1), FRAME).m - np.eye(3)).max() <= 1e-15
    worst = 0.0
    for _ in range(10000):
        v, w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        s, t = rng.standard_normal(2)
        lhs = n_matrix(HeisPoint(np.array([v]), s), FRAME) @ n_matrix(HeisPoint(np.array([w]), t), FRAME)
        rhs = n_matrix(HeisPoint(*group_mul(np.array([v]), s, np.array([w]), t)), FRAME)
        worst = max(worst, np.abs(lhs.m - rhs.m).max())
    assert worst <= 1e-11


def test_a_matrix_one_parameter_and_fixed_points():
    a = a_matrix(0.3, FRAME) @ a_matrix(1.1, FRAME)
    assert np.abs(a.m - a_matrix(1.4, FRAME).m).max() <= 1e-13
    for p in (FRAME.xi_plus, FRAME.xi_minus):
        assert boundary_act(a, p) == p
    assert boundary_act(n_matrix(HeisPoint(np.array([1 - 1j]), 2.0), FRAME), FRAME.xi_plus) == FRAME.xi_plus


def test_conjugation_by_log2(rng):
    t = np.log(2.0)
    for _ in range(20):
        v = np.array([complex(*rng.standard_normal(2))])
        s = rng.standard_normal()
        lhs = a_matrix(-t, FRAME) @ n_matrix(HeisPoint(v, s), FRAME) @ a_matrix(t, FRAME)
        assert np.abs(lhs.m - n_matrix(HeisPoint(2 * v, 4 * s), FRAME).m).max() <= 1e-10


def test_phi_chart(rng):
    e = GroupElement.identity(2)
    assert phi_chart(e, FRAME, HeisPoint.identity(1)) == FRAME.xi_minus
    assert phi_chart(e, FRAME, HeisPoint.infinity()) == FRAME.xi_plus
    g = random_isometry(rng, 2)
    worst = 0.0
    for _ in range(10000 // 50):
        h = HeisPoint(np.array([complex(*rng.standard_normal(2))]), rng.standard_normal())
        back = phi_chart_inv(g, FRAME, phi_chart(g, FRAME, h))
        worst = max(worst, abs(back.v[0] - h.v[0]), abs(back.t - h.t))
    assert worst <= 1e-10
    with pytest.raises(DomainError):
        phi_chart_inv(g, FRAME, boundary_act(g, FRAME.xi_plus))


def test_vectors_to_heis_round_trip(rng):
    v = rng.standard_normal((10000, 1)) + 1j * rng.standard_normal((10000, 1))
    t = rng.standard_normal(10000)
    v2, t2 = vectors_to_heis(heis_to_vectors(v, t, FRAME), FRAME)
    assert np.abs(v2 - v).max() <= 1e-10 and np.abs(t2 - t).max() <= 1e-10


def test_translates_of_center_are_chains_through_infinity(rng):
    for _ in range(10):
        v0 = np.array([complex(*rng.standard_normal(2))])
        t = np.linspace(-20, 20, 41)
        Z = heis_to_vectors(np.broadcast_to(v0, (41, 1)), t, FRAME)
        res = chain_residual_vectors(Z[0], FRAME.xi_plus.z, Z[1:])
        assert res.max() <= 1e-8


def test_invariant_battery(rng):
    for check in (busemann_limit, gromov_conformality, gromov_equivariance, unit_speed,
                  iwasawa_conjugation, chain_parametrisation, vertical_line_chain):
        c = check(rng)
        assert c.passed, c


def _ratio_band(ratio):
    return ratio.max() / ratio.min()


def test_gromov_heisenberg_bilipschitz_stable(rng):
    # chart coordinates h = phi^-1(xi)^-1 on a compact set; pairs at shrinking scales
    o = HPoint.origin(2).z
    v0 = (rng.uniform(-1, 1, (2000, 1)) + 1j * rng.uniform(-1, 1, (2000, 1)))
    t0 = rng.uniform(-1, 1, 2000)
    bands = []
    for scale in (1e-1, 1e-2, 1e-3, 1e-4):
        dv = scale * (rng.standard_normal((2000, 1)) + 1j * rng.standard_normal((2000, 1)))
        dt = scale ** 2 * rng.standard_normal(2000)
        v1, t1 = group_mul(dv, dt, v0, t0)
        # build boundary points whose chart coordinates are (v0, t0) and (v1, t1)
        A = heis_to_vectors(*_inv(v0, t0), FRAME)
        B = heis_to_vectors(*_inv(v1, t1), FRAME)
        ha, hb = heisenberg_coords(A, FRAME), heisenberg_coords(B, FRAME)
        ratio = gromov_dist_vectors(o, A, B) / gauge_dist(*ha, *hb)
        bands.append((ratio.min(), ratio.max()))
    lo = min(b[0] for b in bands)
    hi = max(b[1] for b in bands)
    assert lo > 0.1 and hi < 10
    # the band at 1e-4 is no wider than at 1e-2 (up to sampling)
    assert bands[-1][1] / bands[-1][0] <= 1.5 * bands[1][1] / bands[1][0]


def _inv(v, t):
    from schottkydim.heisenberg import group_inv

    return group_inv(v, t)


def test_euclidean_spherical_bilipschitz_stable(rng):
    v0 = rng.uniform(-1, 1, (2000, 1)) + 1j * rng.uniform(-1, 1, (2000, 1))
    t0 = rng.uniform(-1, 1, 2000)
    widths = []
    for scale in (1e-2, 1e-3, 1e-4):
        v1 = v0 + scale * (rng.standard_normal((2000, 1)) + 1j * rng.standard_normal((2000, 1)))
        t1 = t0 + scale * rng.standard_normal(2000)
        A, B = heis_to_vectors(v0, t0, FRAME), heis_to_vectors(v1, t1, FRAME)
        dE = np.sqrt(np.abs(v1 - v0)[:, 0] ** 2 + (t1 - t0) ** 2)
        ratio = spherical_dist_vectors(A, B) / dE
        widths.append(_ratio_band(ratio))
        assert ratio.min() > 0.05 and ratio.max() < 20
    assert max(widths) <= 1.5 * min(widths)


def test_dilation_commutes_with_chart(rng):
    v = rng.standard_normal((100, 1)) + 1j * rng.standard_normal((100, 1))
    t = rng.standard_normal(100)
    Z = heis_to_vectors(*dilation(np.e ** 0.5, v, t), FRAME)
    W = heis_to_vectors(v, t, FRAME) @ a_matrix(-0.5, FRAME).m.T
    assert spherical_dist_vectors(Z, W).max() <= 1e-10 or spherical_dist_vectors(
        Z, heis_to_vectors(v, t, FRAME) @ a_matrix(0.5, FRAME).m.T).max() <= 1e-10
