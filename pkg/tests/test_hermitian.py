import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schottkydim.errors import ConditioningError, DomainError, InputError
from schottkydim.hermitian import (
    ELLIPTIC,
    HYPERBOLIC,
    PARABOLIC,
    BoundaryPoint,
    GroupElement,
    HermitianSpace,
    HPoint,
    cayley_matrix,
    classify,
    fixed_boundary_points,
    form_eval,
    isometry_residual,
    normalize_isometry,
    norm2,
    siegel_form,
    translation_length,
)
from schottkydim.hyperbolic import (
    IwasawaFrame,
    a_matrix,
    boundary_act,
    n_matrix,
    random_isometry,
)
from schottkydim.heisenberg import HeisPoint


def test_form_on_basis_vectors():
    e = np.eye(3)
    assert form_eval(e[0], e[0]) == 1
    assert form_eval(e[1], e[1]) == -1
    assert form_eval(e[0], e[1]) == 0


def test_form_dimension_mismatch():
    with pytest.raises(InputError):
        form_eval(np.ones(3), np.ones(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_form_sesquilinear(n, seed):
    rng = np.random.default_rng(seed)
    x, y, z = (rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1) for _ in range(3))
    a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert abs(form_eval(x, y) - np.conj(form_eval(y, x))) <= 1e-13
    lhs = form_eval(x, a * y + b * z)
    assert abs(lhs - a * form_eval(x, y) - b * form_eval(x, z)) <= 1e-13 * max(1, abs(lhs))
    lhs = form_eval(a * x, y)
    assert abs(lhs - np.conj(a) * form_eval(x, y)) <= 1e-13 * max(1, abs(lhs))


def test_hermitian_space_signature():
    for n in (1, 2, 3):
        for S in (HermitianSpace.ball(n), HermitianSpace.siegel(n)):
            w = np.linalg.eigvalsh(S.J)
            assert (w > 0).sum() == 1 and (w < 0).sum() == n
    with pytest.raises(InputError):
        HermitianSpace(2, np.eye(3))


def test_cayley_carries_ball_to_siegel():
    for n in (1, 2, 3):
        C = cayley_matrix(n)
        J = np.diag([1.0] + [-1.0] * n)
        assert np.abs(C.conj().T @ J @ C - siegel_form(n)).max() <= 1e-15


def test_points_validate_sign():
    assert HPoint(np.array([2.0, 0.5, 0.0])).z[0] > 0
    assert abs(norm2(HPoint(np.array([2.0, 0.5, 0.0])).z) - 1) <= 1e-15
    with pytest.raises(DomainError):
        HPoint(np.array([0.1, 1.0, 0.0]))
    p = BoundaryPoint(np.array([2j, 0.0, 2.0]))
    assert abs(np.linalg.norm(p.z) - 1) <= 1e-15 and p.z[0].imag == 0 and p.z[0].real > 0
    with pytest.raises(DomainError):
        BoundaryPoint(np.array([1.0, 0.5, 0.0]))


def test_normalize_identity_and_exact(rng):
    eye = GroupElement.identity(2)
    assert np.abs(normalize_isometry(eye).m - np.eye(3)).max() <= 1e-15
    g = random_isometry(rng, 2)
    assert np.abs(normalize_isometry(g).m - g.m).max() <= 1e-12 * np.abs(g.m).max()


def test_normalize_repairs_perturbation(rng):
    g = random_isometry(rng, 2)
    bumped = g.m + 1e-6 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    h = normalize_isometry(bumped)
    J = np.diag([1.0, -1.0, -1.0])
    assert np.abs(h.m.conj().T @ J @ h.m - J).max() / np.linalg.norm(h.m, 2) ** 2 <= 1e-12
    assert np.abs(h.m - g.m).max() <= 1e-4


def test_normalize_rejects_far_matrix():
    with pytest.raises(ConditioningError):
        normalize_isometry(np.eye(3) + 0.1)


def test_normalize_product_closure(rng):
    for _ in range(100):
        g = random_isometry(rng, 2) @ random_isometry(rng, 2)
        assert isometry_residual(normalize_isometry(g).m) <= 1e-12


def test_group_element_rejects_non_isometry():
    with pytest.raises(InputError):
        GroupElement(np.diag([2.0, 1.0, 1.0]))
    with pytest.raises(InputError):
        GroupElement(np.ones((2, 3)))


def test_classify_examples():
    frame = IwasawaFrame.standard(2)
    assert classify(a_matrix(1.0, frame)) == HYPERBOLIC
    assert classify(GroupElement.identity(2)) == ELLIPTIC
    assert classify(n_matrix(HeisPoint(np.array([1.0]), 0.0), frame)) == PARABOLIC
    assert classify(n_matrix(HeisPoint(np.array([0.0]), 1.0), frame)) == PARABOLIC
    rot = GroupElement(np.diag([1.0, np.exp(0.3j), np.exp(-1.1j)]))
    assert classify(rot) == ELLIPTIC


def test_classify_conjugation_invariant(rng):
    frame = IwasawaFrame.standard(2)
    base = [a_matrix(0.8, frame), n_matrix(HeisPoint(np.array([0.3 - 1j]), 0.5), frame),
            GroupElement(np.diag([1.0, 1j, -1.0]))]
    for _ in range(100):
        h = random_isometry(rng, 2)
        for g in base:
            assert classify(g.conjugate_by(h)) == classify(g)


def test_fixed_points_of_diagonal():
    frame = IwasawaFrame.standard(2)
    att, rep = fixed_boundary_points(a_matrix(1.0, frame))
    # a_t with t > 0 expands the last Siegel axis
    assert att == frame.xi_minus and rep == frame.xi_plus


def test_fixed_points_swap_and_equivariance(rng):
    frame = IwasawaFrame.standard(2)
    for _ in range(20):
        g = a_matrix(rng.uniform(0.2, 2), frame).conjugate_by(random_isometry(rng, 2))
        att, rep = fixed_boundary_points(g)
        att_i, rep_i = fixed_boundary_points(g.inverse())
        assert att == rep_i and rep == att_i
        h = random_isometry(rng, 2)
        att_h, rep_h = fixed_boundary_points(g.conjugate_by(h))
        assert att_h == boundary_act(h, att) and rep_h == boundary_act(h, rep)
        for p in (att, rep):
            assert abs(norm2(p.z)) <= 1e-10
            assert boundary_act(g, p) == p


def test_fixed_points_reject_parabolic():
    frame = IwasawaFrame.standard(2)
    with pytest.raises(DomainError):
        fixed_boundary_points(n_matrix(HeisPoint(np.array([1.0]), 0.0), frame))


def test_translation_length():
    frame = IwasawaFrame.standard(2)
    g = a_matrix(1.0, frame)
    tl = translation_length(g, k=16)
    assert abs(tl.value - 1.0) <= 0.05
    assert len(tl.history) == 16
    assert abs(translation_length(g.power(2), k=16).value - 2 * tl.value) <= 0.05
    # strongly hyperbolic: the orbit leaves double range without trouble
    assert abs(translation_length(a_matrix(60.0, frame), k=16).value - 60.0) <= 0.05


def test_translation_length_rejects():
    with pytest.raises(DomainError):
        translation_length(GroupElement.identity(2))
    with pytest.raises(InputError):
        translation_length(a_matrix(1.0, IwasawaFrame.standard(2)), k=4)


def test_power_and_inverse(rng):
    g = random_isometry(rng, 3)
    assert np.abs((g @ g.inverse()).m - np.eye(4)).max() <= 1e-10 * np.abs(g.m).max() ** 2
    assert g.power(3).projectively_close(g @ g @ g)
    assert g.power(-2).projectively_close(g.inverse() @ g.inverse())
