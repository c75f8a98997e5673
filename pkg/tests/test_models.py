"""Constraint models, retractions, actions, isotropy."""
import math

import numpy as np
import pytest

from geolab import models as M
from geolab import quaternion as Q
from geolab.errors import BadGroupElement, BadParameter, DegenerateRow, NotNearManifold

SUPPORTED = [
    ("su2", "su2-conj"), ("su2", "hopf"), ("s7", "hopf"), ("s7", "s7-star"),
    ("sp2", "sp2-bullet"), ("sp2", "sp2-star"), ("sigma", "sigma-bullet"), ("minkowski", "translation"),
]


@pytest.mark.parametrize("model", ["su2", "s7", "sp2"])
def test_random_points_are_members(model, rng):
    for _ in range(20):
        assert M.random_point(model, rng).membership_residual() < 1e-12


def test_identity_in_sp2():
    # [TRIVIAL] (a, c, b, d) = (1, 0, 0, 1)
    p = M.point("sp2", [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0]])
    assert p.is_member()


def test_sp2_rows_orthonormal_as_matrix(rng):
    # [DERIVED] complex 4x4 representation is unitary
    from geolab.star import quat_to_complex

    p = M.random_point("sp2", rng)
    C = quat_to_complex(p.coords.reshape(2, 2, 4))
    assert np.allclose(C.conj().T @ C, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("model", ["minkowski", "su2", "s7", "sp2", "sigma"])
def test_tangent_dimension(model, rng):
    p = M.random_point("sp2" if model == "sigma" else model, rng)
    p = M.ManifoldPoint(model, p.coords)
    assert M.tangent_basis(model, p).shape[0] == M.DIM[model]


def test_projection_is_tangent_and_idempotent(rng):
    for model in ("su2", "s7", "sp2"):
        p = M.random_point(model, rng)
        v = M.project_tangent(p, rng.standard_normal(p.flat.size))
        assert v.tangency_residual() < 1e-12
        assert np.allclose(M.project_tangent(p, v).flat, v.flat, atol=1e-12)


def test_constraint_jacobian_matches_differences(rng):
    x = M.random_point("sp2", rng).flat
    J = M.constraint_jacobian("sp2", x)
    h = 1e-6
    Jn = np.stack([(M.constraints("sp2", x + h * e) - M.constraints("sp2", x - h * e)) / (2 * h)
                   for e in np.eye(16)], axis=1)
    assert np.allclose(J, Jn, atol=1e-8)


def test_retraction(rng):
    p = M.random_point("sp2", rng)
    q = M.retract("sp2", p.flat + 1e-3 * rng.standard_normal(16))
    assert q.membership_residual() < 1e-12
    with pytest.raises(NotNearManifold):
        M.retract("s7", 3 * p.flat[:8])
    with pytest.raises(DegenerateRow):
        M.retract_array("su2", np.zeros(4))


@pytest.mark.parametrize("model,action", SUPPORTED)
def test_actions_preserve_membership(model, action, rng):
    base = "sp2" if model == "sigma" else model
    p = M.ManifoldPoint(model, M.random_point(base, rng).coords)
    q = [1.0, 0.3, 0.0, 0.0] if M.get_action(model, action).group == "S1" else [0.5, 0.5, -0.5, 0.5]
    q = np.asarray(q) / np.linalg.norm(q)
    out = M.act(model, action, q, p)
    if model != "minkowski":
        assert out.membership_residual() < 1e-12


@pytest.mark.parametrize("model,action", SUPPORTED)
def test_killing_field_matches_orbit_derivative(model, action, rng):
    # [DERIVED] central difference of the orbit against the analytic field
    base = "sp2" if model == "sigma" else model
    p = M.ManifoldPoint(model, M.random_point(base, rng).coords)
    for U in M.get_action(model, action).algebra:
        num = M.action_field(model, action, U, p).flat
        ana = M.killing_array(model, action, p.coords, U).reshape(-1)
        assert np.allclose(num, ana, atol=1e-8)


def test_killing_frozen_values():
    # [TRIVIAL] i j - j i = 2k for su2-conj at j ; Hopf field at 1 is i
    j = M.point("su2", Q.E_J)
    assert np.allclose(M.killing_array("su2", "su2-conj", j.coords), [[0, 0, 0, 2]])
    one = M.point("su2", Q.E_ONE)
    assert np.allclose(M.killing_array("su2", "hopf", one.coords), [[0, 1, 0, 0]])


def test_bad_group_element_and_action(rng):
    p = M.random_point("su2", rng)
    with pytest.raises(BadGroupElement):
        M.act("su2", "hopf", [2.0, 0, 0, 0], p)
    with pytest.raises(BadParameter):
        M.get_action("su2", "sp2-star")
    with pytest.raises(BadParameter):
        M.point("torus", [0, 0])


def test_bullet_and_star_commute(rng):
    # [DERIVED] 10^4 random triples
    n = 10000
    X = M.random_coords("sp2", rng, n).reshape(n, 4, 4)
    q = Q.qexp_arr(np.concatenate([np.zeros((n, 1)), rng.standard_normal((n, 3))], axis=1))
    r = Q.qexp_arr(np.concatenate([np.zeros((n, 1)), rng.standard_normal((n, 3))], axis=1))
    bullet = M.get_action("sp2", "sp2-bullet").apply
    star = M.get_action("sp2", "sp2-star").apply
    lhs = bullet(q, star(r, X))
    rhs = star(r, bullet(q, X))
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_isotropy_patterns():
    # [TRIVIAL] 1 is fixed by conjugation; j is moved to e^{2 i t} j, back at t = pi
    assert M.isotropy_scan("su2", "su2-conj", M.point("su2", Q.E_ONE)).kind == "FullCircle"
    assert M.isotropy_scan("su2", "su2-conj", M.point("su2", Q.E_J)).kind == "Z2"
    assert M.isotropy_scan("su2", "hopf", M.point("su2", Q.E_J)).kind == "Trivial"
    # complex pairs are fixed by the star circle on S^7
    z = M.point("s7", [0.6, 0.0, 0, 0, 0.0, 0.8, 0, 0])
    assert M.is_fixed("s7", "s7-star", z)
    with pytest.raises(BadParameter):
        M.isotropy_scan("su2", "hopf", z, n_grid=100)


def test_vertical_and_horizontal_spaces(rng):
    p = M.random_principal_point("sp2", "sp2-bullet", rng)
    V = M.vertical_space("sp2", "sp2-bullet", p)
    H = M.horizontal_space("sp2", "sp2-bullet", p)
    assert len(V) == 3 and len(H) == 7
    for h in H:
        assert max(abs(h.flat @ v.flat) for v in V) < 1e-10
    assert M.vertical_space("su2", "su2-conj", M.point("su2", Q.E_ONE)) == []


def test_minkowski_constant():
    # [DERIVED] c^2 = (r^2 - 1)/r^4 at r^2 = 2 is 1/4
    assert math.isclose(M.minkowski_c2(math.sqrt(2)), 0.25, rel_tol=1e-15)
    p = M.point("minkowski", [0.3, 1, 2, 3])
    e0 = M.vector(p, [1, 0, 0, 0])
    assert math.isclose(M.minkowski_metric(e0, e0, math.sqrt(2)), -0.25, rel_tol=1e-15)
    with pytest.raises(BadParameter):
        M.minkowski_c2(1.0)
