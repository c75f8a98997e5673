"""Chart-based curvature against closed forms."""
import json
import math

import numpy as np
import pytest

from geolab import cheeger as C
from geolab import curvature as CV
from geolab import models as M
from geolab.errors import DegeneratePlane

AMB = {m: C.MetricSpec("Ambient", model=m) for m in ("su2", "s7", "sp2", "sigma")}


def sigma_point(rng):
    return M.ManifoldPoint("sigma", M.random_point("sp2", rng).coords)


@pytest.mark.parametrize("model,scal", [("su2", 6.0), ("s7", 42.0)])
def test_round_spheres(model, scal, rng):
    # [TRIVIAL] unit spheres: sectional 1, scalar n(n-1)
    p = M.random_point(model, rng)
    rep = CV.curvature_report(p, AMB[model])
    v, w = M.random_tangent(p, rng), M.random_tangent(p, rng)
    assert rep.sectional(v, w) == pytest.approx(1.0, abs=1e-6)
    assert rep.scalar == pytest.approx(scal, rel=1e-6)


def test_minkowski_flat(rng):
    # [PAPER] the constant Lorentz metric on H has zero curvature
    spec = C.MetricSpec("Minkowski", model="minkowski", r=math.sqrt(2))
    p = M.point("minkowski", rng.standard_normal(4))
    rep = CV.curvature_report(p, spec)
    assert np.max(np.abs(rep.riemann)) < 1e-6
    assert np.allclose(np.diag(rep.metric), [-0.25, 1, 1, 1], atol=1e-12)


@pytest.mark.parametrize("model,point", [("sp2", None), ("sigma", sigma_point)])
def test_base_curvature_closed_form(model, point, rng):
    # [DERIVED] bi-invariant formula and O'Neill on the star quotient against the chart
    p = point(rng) if point else M.random_point(model, rng)
    rep = CV.curvature_report(p, AMB[model])
    for _ in range(3):
        X, Y = M.random_tangent(p, rng), M.random_tangent(p, rng)
        num = rep.riemann_eval(X, Y, Y, X)
        assert num == pytest.approx(CV.base_riemann(p, X.flat, Y.flat, Y.flat, X.flat), rel=1e-4, abs=1e-6)


def test_symmetries_of_deformed_tensor(rng):
    spec = C.MetricSpec.cheeger("su2", "su2-conj", -2.0)
    p = M.random_principal_point("su2", "su2-conj", rng)
    R = CV.curvature_report(p, spec).riemann
    scale = np.max(np.abs(R))
    assert np.max(np.abs(R + R.transpose(1, 0, 2, 3))) < 1e-6 * scale
    assert np.max(np.abs(R + R.transpose(0, 1, 3, 2))) < 1e-6 * scale
    assert np.max(np.abs(R - R.transpose(2, 3, 0, 1))) < 1e-5 * scale
    bianchi = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    assert np.max(np.abs(bianchi)) < 1e-5 * scale


def test_chart_orthonormal_at_center(rng):
    # [TRIVIAL] the chart frame is an orthonormal tangent basis
    p = M.random_point("s7", rng)
    chart = CV.build_chart(p)
    g = CV.metric_components(chart, np.zeros(7), AMB["s7"])
    assert np.allclose(g, np.eye(7), atol=1e-12)


def test_degenerate_plane(rng):
    p = M.random_point("su2", rng)
    rep = CV.curvature_report(p, AMB["su2"])
    v = M.random_tangent(p, rng)
    with pytest.raises(DegeneratePlane):
        rep.sectional(v, M.TangentVector(p, 2 * v.flat))


def test_report_json(rng):
    p = M.random_point("su2", rng)
    d = CV.curvature_report(p, AMB["su2"]).to_json()
    text = json.dumps(d)
    assert json.loads(text)["point"]["model"] == "su2"
    assert len(d["riemann"]) == 3


@pytest.mark.parametrize("model,action", [("su2", "hopf"), ("su2", "su2-conj"), ("s7", "s7-star"),
                                          ("sigma", "sigma-bullet")])
def test_oneill_tensors(model, action, rng):
    # [DERIVED] A_X Y = -B(X,Y)/P K, duality g(A_X Y, V) = g(Y, A*_X V), S from X(P)
    p = sigma_point(rng) if model == "sigma" else M.random_principal_point(model, action, rng)
    K = C.killing(model, action, p.flat)
    P = K @ K
    H = [h.flat for h in M.horizontal_space(model, action, p)]
    X, Y = M.TangentVector(p, H[0]), M.TangentVector(p, H[1])
    V = M.TangentVector(p, 0.7 * K)
    A = CV.oneill_A(X, Y, action).flat
    assert np.allclose(A, -C.b_form(p, action, X.flat, Y.flat) / P * K, atol=1e-8)
    As = CV.a_star(X, V, action).flat
    assert A @ V.flat == pytest.approx(Y.flat @ As, abs=1e-8)
    base = "sp2" if model == "sigma" else model

    def P_at(x):
        k = C.killing(model, action, x)
        return k @ k

    h = 1e-6
    XP = (P_at(M.retract_array(base, p.flat + h * X.flat, check=False))
          - P_at(M.retract_array(base, p.flat - h * X.flat, check=False))) / (2 * h)
    S = CV.shape_S(X, V, action).flat
    assert np.allclose(S, -0.7 * 0.5 * XP / P * K, atol=1e-6)


def test_hopf_fibers_totally_geodesic(rng):
    # [TRIVIAL] P is constant for the Hopf action
    p = M.random_point("s7", rng)
    X = M.horizontal_space("s7", "hopf", p)[0]
    V = M.TangentVector(p, C.killing("s7", "hopf", p.flat))
    assert np.max(np.abs(CV.shape_S(X, V, "hopf").flat)) < 1e-8


def test_fat_hopf_bundle(rng):
    # [DERIVED] sec(X, V) = |A*_X V|^2/(|X|^2|V|^2) = 1 on the Hopf bundle of S^3
    p = M.random_point("su2", rng)
    X = M.horizontal_space("su2", "hopf", p)[0]
    V = M.TangentVector(p, C.killing("su2", "hopf", p.flat))
    a = CV.a_star(X, V, "hopf").flat
    assert (a @ a) / ((X.flat @ X.flat) * (V.flat @ V.flat)) == pytest.approx(1.0, rel=1e-8)
