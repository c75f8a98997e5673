"""Geodesic integration, transport and fixed-point probes."""
import math

import numpy as np
import pytest

from geolab import cheeger as C
from geolab import geodesics as G
from geolab import models as M
from geolab import quaternion as Q
from geolab.errors import BadParameter, DegenerateMetric, NotFixedPoint

AMB_SU2 = C.MetricSpec("Ambient", model="su2")


def test_config_validation():
    with pytest.raises(BadParameter):
        G.IntegratorConfig(step=0.1)
    with pytest.raises(BadParameter):
        G.IntegratorConfig(chart_hop_radius=0.05)


def test_great_circle(rng):
    # [DERIVED] closed-form great circle cos(s) p + sin(s) v
    p = M.random_point("s7", rng)
    v = M.random_tangent(p, rng)
    v = M.TangentVector(p, v.flat / np.linalg.norm(v.flat))
    cfg = G.IntegratorConfig(step=1e-3, max_param=2.0, sample_every=500)
    tr = G.integrate(p, v, C.MetricSpec("Ambient", model="s7"), cfg)
    s = tr.s[-1]
    assert s == pytest.approx(2.0)
    assert np.allclose(tr.points[-1], math.cos(s) * p.flat + math.sin(s) * v.flat, atol=1e-9)
    assert tr.energy_drift < 1e-10
    assert tr.constraint_violation < 1e-12


def test_minkowski_straight_line(rng):
    # [TRIVIAL] flat metric: x(s) = x0 + s v
    spec = C.MetricSpec("Minkowski", model="minkowski", r=math.sqrt(2))
    p = M.point("minkowski", rng.standard_normal(4))
    v = M.vector(p, rng.standard_normal(4))
    tr = G.integrate(p, v, spec, G.IntegratorConfig(step=1e-2, max_param=5.0))
    assert np.allclose(tr.points[-1], p.flat + 5.0 * v.flat, atol=1e-10)
    assert tr.killing_drift < 1e-12


def test_cheeger_conservation(rng):
    # [DERIVED] energy and Killing charge are first integrals
    spec = C.MetricSpec.cheeger("su2", "su2-conj", -2.0)
    while True:
        p = M.random_principal_point("su2", "su2-conj", rng)
        if C.lorentzian_region("su2", "su2-conj", p.flat, math.sqrt(2)):
            break
    v = G.sample_causal_vector(spec, p, M.CausalClass.TimeLike, rng)
    tr = G.integrate(p, v, spec, G.IntegratorConfig(step=1e-3, max_param=5.0))
    assert tr.causal == M.CausalClass.TimeLike
    assert tr.energy_drift < 1e-6
    assert tr.killing_drift < 1e-6


def test_dop853_matches_rk4(rng):
    # [DERIVED] two integrators, same fixed Lorentz geodesics
    spec = C.MetricSpec("FixedLorentz", t=-2.0, model="s7", action="hopf")
    X = np.array([M.random_point("s7", rng).flat for _ in range(3)])
    V = np.array([M.random_tangent(M.point("s7", x), rng).flat for x in X])
    a = G.integrate_batch(X, V, spec, G.IntegratorConfig(step=1e-3, max_param=3.0, sample_every=500))
    b = G.integrate_batch(X, V, spec, G.IntegratorConfig(step=1e-3, max_param=3.0, sample_every=500,
                                                         method="dop853"))
    for ta, tb in zip(a, b):
        assert np.array_equal(ta.s, tb.s)
        assert np.allclose(ta.points, tb.points, atol=1e-8)
        assert tb.energy_drift < 1e-10 and tb.killing_drift < 1e-10
        assert tb.constraint_violation < 1e-12


def test_dop853_refuses_degenerate_metrics(rng):
    p = M.random_principal_point("su2", "su2-conj", rng)
    with pytest.raises(BadParameter):
        G.integrate(p, M.random_tangent(p, rng), C.MetricSpec.cheeger("su2", "su2-conj", -2.0),
                    G.IntegratorConfig(method="dop853"))
    with pytest.raises(BadParameter):
        G.IntegratorConfig(method="euler")


def test_chart_integrator_agrees(rng):
    # [DERIVED] Christoffel-based RKN in charts against the ambient constrained integrator
    spec = C.MetricSpec.cheeger("su2", "hopf", -2.0)
    p = M.random_point("su2", rng)
    v = M.random_tangent(p, rng)
    cfg = G.IntegratorConfig(step=1e-2, max_param=0.5, sample_every=10)
    a = G.integrate(p, v, spec, cfg)
    b = G.integrate_chart(p, v, spec, cfg)
    assert np.allclose(a.points[-1], b.points[-1], atol=1e-6)


def test_fixed_lorentz_completeness_short(rng):
    spec = C.MetricSpec("FixedLorentz", t=-2.0, model="su2", action="hopf")
    rep = G.completeness_probe("su2", spec, 3, 5.0, rng)
    assert rep.complete
    assert rep.causal_counts == {"TimeLike": 3, "SpaceLike": 3}
    assert rep.max_energy_drift < 1e-6 and rep.max_killing_drift < 1e-6


def test_abort_on_degenerate_locus():
    # [DERIVED] the geodesic from 1 along i stays on the fixed circle
    spec = C.MetricSpec.cheeger("su2", "su2-conj", -2.0)
    p = M.point("su2", Q.qexp_arr([0, 1e-3, 0, 0]))
    with pytest.raises(DegenerateMetric):
        G.integrate(p, M.TangentVector(p, M.project_array("su2", p.flat, Q.E_I)), spec)


def test_holonomy_on_hopf(rng):
    # [DERIVED] transport around a Hopf fiber keeps length and horizontality
    p = M.random_point("su2", rng)
    X = M.horizontal_space("su2", "hopf", p)[0]
    tr = G.holonomy_transport(X, "hopf")
    norms = np.linalg.norm(tr.field, axis=1)
    assert np.ptp(norms) < 1e-8
    K = np.array([C.killing("su2", "hopf", x) for x in tr.points])
    assert np.max(np.abs(np.sum(K * tr.field, axis=1))) < 1e-8


def test_dual_holonomy_on_hopf(rng):
    # [DERIVED] vertical stays vertical with constant length on totally geodesic fibers
    p = M.random_point("s7", rng)
    nu0 = M.TangentVector(p, C.killing("s7", "hopf", p.flat))
    X = M.horizontal_space("s7", "hopf", p)[0]
    tr = G.dual_holonomy_transport(nu0, X, "hopf")
    assert np.ptp(np.linalg.norm(tr.field, axis=1)) < 1e-8
    for x, nu in zip(tr.points, tr.field):
        K = C.killing("s7", "hopf", x)
        assert np.linalg.norm(nu - (nu @ K) / (K @ K) * K) < 1e-8


@pytest.mark.parametrize("model,action,rank,cover", [("su2", "hopf", 1, 3), ("s7", "s7-star", 1, 7),
                                                     ("minkowski", "translation", 0, 3)])
def test_dual_leaf(model, action, rank, cover, rng):
    p = M.random_principal_point(model, action, rng)
    rep = G.dual_leaf_probe(p, action, n_steps=60, rng=rng)
    assert rep.reached_vertical_rank == rank
    assert rep.covering_dimension == cover
    assert rep.single_leaf == (cover == M.DIM[model])


def test_fake_horizontal():
    # [PAPER] i is fake horizontal at 1, j is not (S~ = 2k)
    one = M.point("su2", Q.E_ONE)
    assert G.fake_horizontal_classify(one, M.TangentVector(one, Q.E_I), "su2-conj") == "FullAlgebra"
    assert G.fake_horizontal_classify(one, M.TangentVector(one, Q.E_J), "su2-conj") == "TrivialAlgebra"
    assert np.allclose(G.fake_horizontal_value(one, M.TangentVector(one, Q.E_J), "su2-conj"), [0, 0, 0, 2],
                       atol=1e-8)
    with pytest.raises(NotFixedPoint):
        j = M.point("su2", Q.E_J)
        G.fake_horizontal_classify(j, M.TangentVector(j, Q.E_I), "su2-conj")


def test_trace_samples(rng):
    p = M.random_point("su2", rng)
    v = M.random_tangent(p, rng)
    tr = G.integrate(p, v, AMB_SU2, G.IntegratorConfig(step=1e-2, max_param=1.0, sample_every=10))
    samples = list(tr.samples())
    assert len(samples) == 11
    s, q, w = samples[-1]
    assert q.is_member() and w.tangency_residual() < 1e-10
