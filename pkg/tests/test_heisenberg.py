import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schottkydim.errors import DomainError, InputError
from schottkydim.heisenberg import (
    HeisPoint,
    chain_param_n2,
    chain_param_theta_at,
    chain_residual_vectors,
    chain_through,
    dilate,
    euclid_dist,
    gauge_dist,
    group_mul,
    heis_dist,
    heis_inv,
    heis_mul,
    heis_norm,
    point_on_chain,
    project_vertical,
)
from schottkydim.hermitian import BoundaryPoint, GroupElement
from schottkydim.hyperbolic import IwasawaFrame, heis_to_vectors, phi_chart, random_boundary_points
from schottkydim.sanity import (
    dilation_ratio,
    fiber_identity,
    heisenberg_axioms,
    compact_band,
    quotient_metric,
    right_invariance,
)

coord = st.floats(-10, 10, allow_nan=False)


def hp(v, t):
    return HeisPoint(np.array([v]), t)


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord, coord, coord)
def test_group_law_spec_example_and_identity(a, b, c, d, s, t):
    x = HeisPoint(np.array([a + 1j * b]), s)
    y = HeisPoint(np.array([c + 1j * d]), t)
    e = HeisPoint.identity(1)
    assert heis_mul(x, e) == x and heis_mul(e, x) == x
    assert heis_mul(x, heis_inv(x)) == e
    # only the symplectic term breaks commutativity
    xy, yx = heis_mul(x, y), heis_mul(y, x)
    assert np.allclose(xy.v, yx.v)
    assert abs((xy.t - yx.t) - 2 * (a * d - b * c)) <= 1e-9 * max(1, abs(xy.t))


def test_group_law_example():
    assert heis_mul(hp(1.0, 0.0), hp(1j, 0.0)).t == 1.0


def test_center_commutes(rng):
    z = (np.zeros((1000, 1)), rng.standard_normal(1000))
    v = rng.standard_normal((1000, 1)) + 1j * rng.standard_normal((1000, 1))
    w = (v, rng.standard_normal(1000))
    a, b = group_mul(*z, *w), group_mul(*w, *z)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    # a non-central element has a witness
    x = hp(1.0, 0.0)
    assert any(heis_mul(x, hp(complex(*rng.standard_normal(2)), 0.0))
               != heis_mul(hp(complex(*rng.standard_normal(2)), 0.0), x) for _ in range(10))


def test_norm_examples():
    assert heis_norm(hp(0.0, 16.0)) == pytest.approx(4.0, abs=1e-15)
    assert heis_norm(hp(3 + 4j, 0.0)) == pytest.approx(5.0, abs=1e-15)
    assert heis_dist(hp(0.3, 1.0), hp(0.3, 1.0)) == 0


def test_fiber_example():
    a, b = hp(0.7 - 0.2j, 1.0), hp(0.7 - 0.2j, 5.0)
    assert euclid_dist(a, b) == 4.0
    assert heis_dist(a, b) == pytest.approx(2.0, abs=1e-15)


def test_dilate_examples():
    x = hp(1 - 2j, 0.5)
    assert dilate(1.0, x) == x
    assert dilate(2.0, x) == hp(2 - 4j, 2.0)
    with pytest.raises(DomainError):
        dilate(0.0, x)


def test_project_vertical():
    assert np.array_equal(project_vertical(hp(1 + 1j, 3.0)), np.array([1 + 1j]))
    assert np.array_equal(project_vertical(hp(0.0, 3.0)), np.zeros(1))


def test_infinity_rejected():
    with pytest.raises(DomainError):
        heis_norm(HeisPoint.infinity())
    with pytest.raises(InputError):
        HeisPoint(np.array([np.nan]), 0.0)


def test_algebraic_battery(rng):
    for check in (heisenberg_axioms, right_invariance, dilation_ratio, fiber_identity,
                  compact_band, quotient_metric):
        c = check(rng)
        assert c.passed, c


def test_chain_through_rejects_equal_points(rng):
    p = BoundaryPoint(random_boundary_points(rng, 2, 1)[0])
    with pytest.raises(DomainError):
        chain_through(p, p)


def test_chain_membership(rng):
    Z = random_boundary_points(rng, 2, 1002)
    c = chain_through(BoundaryPoint(Z[0]), BoundaryPoint(Z[1]))
    assert point_on_chain(c, c.p) and point_on_chain(c, c.q)
    frame = IwasawaFrame.standard(2)
    c = chain_through(frame.xi_minus, frame.xi_plus)
    for t in np.linspace(-5, 5, 11):
        assert point_on_chain(c, phi_chart(GroupElement.identity(2), frame, hp(0.0, t)))
    assert chain_residual_vectors(Z[0], Z[1], Z[2:]).min() > 1e-4


def test_chain_param_endpoints():
    for s0 in (1.0, -0.4, 3.0):
        v0 = 0.5 + 1j * s0
        at_zero = chain_param_n2(s0, chain_param_theta_at(s0, 0.0))
        at_one = chain_param_n2(s0, chain_param_theta_at(s0, 1.0))
        assert abs(at_zero.v[0]) <= 1e-14 and abs(at_zero.t - s0) <= 1e-14
        assert abs(at_one.v[0] - 1) <= 1e-14 and abs(at_one.t) <= 1e-14
        assert abs(abs(at_one.v[0] - v0) - abs(v0)) <= 1e-14


def test_chain_param_on_chain():
    frame = IwasawaFrame.standard(2)
    for s0 in (1.0, 0.0, -2.0, 7.5):
        P = heis_to_vectors(np.zeros(1), s0, frame)
        Q = heis_to_vectors(np.ones(1), 0.0, frame)
        c = chain_through(BoundaryPoint(P), BoundaryPoint(Q))
        v, s = chain_param_n2(s0, np.linspace(0, 2 * np.pi, 64, endpoint=False))
        for z in heis_to_vectors(v, s, frame):
            assert point_on_chain(c, BoundaryPoint(z), 1e-8)


def test_chain_param_only_n2():
    with pytest.raises(DomainError):
        chain_param_n2(1.0, 0.0, n=3)


def test_gauge_dist_vectorised_matches_points(rng):
    v = rng.standard_normal((5, 1)) + 1j * rng.standard_normal((5, 1))
    t = rng.standard_normal(5)
    d = gauge_dist(v[:-1], t[:-1], v[1:], t[1:])
    for i in range(4):
        assert d[i] == pytest.approx(heis_dist(HeisPoint(v[i], t[i]), HeisPoint(v[i + 1], t[i + 1])), abs=1e-15)
