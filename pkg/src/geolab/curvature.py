"""Numerical curvature oracle and submersion tensors.

Charts are retraction based: u -> retract(center + sum u_i e_i).  Metric
components come from the metric evaluated on the chart pushforwards, and
the curvature tensor is assembled from first and second finite differences
of those components.  Nothing here uses the closed forms in `cheeger`, so
the two can be compared.

Index convention: R[a, b, c, d] = g(R(d_a, d_b) d_c, d_d) with
R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y], so that R(X, Y, Y, X) > 0 on
round spheres.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from . import models as M
from . import quaternion as Q
from .cheeger import EPS_P, MetricSpec, gram_batch, killing
from .errors import DegenerateMetric, DegeneratePlane, NotPrincipal

H_FIRST = 1e-4
H_SECOND = 1e-3
H_PUSH = 1e-4
TOL_CURV = 1e-4


@dataclass(frozen=True, eq=False)
class Chart:
    center: M.ManifoldPoint
    frame: np.ndarray  # (n, N), ambient-orthonormal rows
    radius: float = 0.05

    @property
    def model(self) -> str:
        return self.center.model

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def param(self, u) -> np.ndarray:
        """Ambient coordinates of the chart points; batched over leading axes of u."""
        u = np.asarray(u, dtype=float)
        y = self.center.flat + u @ self.frame
        if self.model == "minkowski":
            return y
        return M.retract_array("sp2" if self.model == "sigma" else self.model, y, check=False)

    def point(self, u) -> M.ManifoldPoint:
        return M.ManifoldPoint(self.model, self.param(u))

    def pushforward(self, u) -> np.ndarray:
        """Tangent images of the coordinate vectors, shape (..., n, N)."""
        u = np.asarray(u, dtype=float)
        E = self.frame
        if self.model == "minkowski":
            return np.broadcast_to(E, u.shape[:-1] + E.shape).copy()
        if self.model in ("su2", "s7"):
            y = self.center.flat + u @ E
            ny = np.linalg.norm(y, axis=-1, keepdims=True)
            phi = y / ny
            D = E - (E @ phi[..., None]) * phi[..., None, :]
            return D / ny[..., None]
        # five-point stencil through the Gram-Schmidt retraction
        h = H_PUSH
        cols = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            f = [self.param(u + s * h * e) for s in (-2, -1, 1, 2)]
            cols.append((f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h))
        D = np.stack(cols, axis=-2)
        if self.model == "sigma":
            x = self.param(u)
            lead = x.shape[:-1]
            xs = x.reshape(lead + (1, 4, 4))
            D = M.star_horizontal_project(
                np.broadcast_to(xs, lead + (self.dim, 4, 4)), D.reshape(lead + (self.dim, 4, 4))
            ).reshape(D.shape)
        return D


def build_chart(p: M.ManifoldPoint, spec: MetricSpec = None, radius: float = 0.05) -> Chart:
    """Chart at p whose frame comes from Gram-Schmidt on projected ambient basis vectors."""
    N = p.flat.size
    frame = []
    for i in range(N):
        e = np.zeros(N)
        e[i] = 1.0
        v = M.project_array(p.model, p.flat, e)
        for f in frame:
            v = v - (v @ f) * f
        for f in frame:
            v = v - (v @ f) * f
        n = np.linalg.norm(v)
        if n > 1e-6:
            frame.append(v / n)
        if len(frame) == M.DIM[p.model]:
            break
    chart = Chart(p, np.array(frame), radius)
    if spec is not None:
        metric_components(chart, np.zeros(chart.dim), spec)
    return chart


def _metric_batch(chart: Chart, U, spec: MetricSpec) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    X = chart.param(U)
    D = chart.pushforward(U)
    return gram_batch(spec, X, D)


def metric_components(chart: Chart, u, spec: MetricSpec) -> np.ndarray:
    g = _metric_batch(chart, np.asarray(u, dtype=float)[None], spec)[0]
    if abs(np.linalg.det(g)) < 1e-12:
        raise DegenerateMetric("singular metric components")
    return g


def _derivatives(chart: Chart, u, spec: MetricSpec):
    """g, dg[k] = d_k g and ddg[k, l] = d_k d_l g at u, Richardson-extrapolated."""
    n = chart.dim
    u = np.asarray(u, dtype=float)
    I = np.eye(n)
    pts = [u]
    h1 = H_FIRST
    for k in range(n):
        for s in (h1, -h1, h1 / 2, -h1 / 2):
            pts.append(u + s * I[k])
    h2 = H_SECOND
    pairs = list(combinations_with_replacement(range(n), 2))
    for k, l in pairs:
        for h in (h2, h2 / 2):
            if k == l:
                pts.extend([u + h * I[k], u - h * I[k]])
            else:
                for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    pts.append(u + h * (a * I[k] + b * I[l]))
    G = _metric_batch(chart, np.array(pts), spec)
    g0 = G[0]
    it = iter(G[1:])
    dg = np.empty((n, n, n))
    for k in range(n):
        p1, m1, p2, m2 = (next(it) for _ in range(4))
        d1 = (p1 - m1) / (2 * h1)
        d2 = (p2 - m2) / h1
        dg[k] = (4 * d2 - d1) / 3
    ddg = np.empty((n, n, n, n))
    for k, l in pairs:
        vals = []
        for h in (h2, h2 / 2):
            if k == l:
                p, m = next(it), next(it)
                vals.append((p - 2 * g0 + m) / h**2)
            else:
                pp, pm, mp, mm = (next(it) for _ in range(4))
                vals.append((pp - pm - mp + mm) / (4 * h * h))
        est = (4 * vals[1] - vals[0]) / 3
        ddg[k, l] = est
        ddg[l, k] = est
    return g0, dg, ddg


def _christoffel_from(g, dg):
    # Gamma_{ij,l} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    low = 0.5 * (dg[:, :, :] + np.transpose(dg, (1, 0, 2)) - np.transpose(dg, (1, 2, 0)))
    ginv = np.linalg.inv(g)
    return np.einsum("kl,ijl->kij", ginv, low)


def christoffel(chart: Chart, u, spec: MetricSpec) -> np.ndarray:
    """Gamma[k, i, j]."""
    g, dg, _ = _derivatives(chart, u, spec)
    if abs(np.linalg.det(g)) < 1e-12:
        raise DegenerateMetric("singular metric components")
    return _christoffel_from(g, dg)


def christoffel_first(chart: Chart, u, spec: MetricSpec):
    """Christoffel symbols from first differences only (cheaper; used by integrators)."""
    n = chart.dim
    u = np.asarray(u, dtype=float)
    I = np.eye(n)
    h = H_FIRST
    pts = [u] + [u + s * I[k] for k in range(n) for s in (h, -h, h / 2, -h / 2)]
    G = _metric_batch(chart, np.array(pts), spec)
    dg = np.empty((n, n, n))
    for k in range(n):
        p1, m1, p2, m2 = G[1 + 4 * k: 5 + 4 * k]
        dg[k] = (4 * (p2 - m2) / h - (p1 - m1) / (2 * h)) / 3
    return G[0], _christoffel_from(G[0], dg)


def _riemann_from(g, dg, ddg):
    Gam = _christoffel_from(g, dg)
    # ddg[a, b, i, j] = d_a d_b g_ij
    R = 0.5 * (
        np.einsum("acbd->abcd", ddg)
        + np.einsum("bdac->abcd", ddg)
        - np.einsum("bcad->abcd", ddg)
        - np.einsum("adbc->abcd", ddg)
    )
    R += np.einsum("ef,eac,fbd->abcd", g, Gam, Gam) - np.einsum("ef,ebc,fad->abcd", g, Gam, Gam)
    return R


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    point: M.ManifoldPoint
    spec: MetricSpec
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    chart: Chart

    def coords_of(self, v) -> np.ndarray:
        D = self.chart.pushforward(np.zeros(self.chart.dim))
        vv = v.flat if isinstance(v, M.TangentVector) else np.asarray(v, dtype=float)
        return np.linalg.lstsq(D.T, vv, rcond=None)[0]

    def riemann_eval(self, x, y, z, w) -> float:
        c = [self.coords_of(a) for a in (x, y, z, w)]
        return float(np.einsum("abcd,a,b,c,d->", self.riemann, *c))

    def ricci_eval(self, v, w=None) -> float:
        a = self.coords_of(v)
        b = a if w is None else self.coords_of(w)
        return float(a @ self.ricci @ b)

    def sectional(self, v, w) -> float:
        a, b = self.coords_of(v), self.coords_of(w)
        g = self.metric
        den = (a @ g @ a) * (b @ g @ b) - (a @ g @ b) ** 2
        if abs(den) < 1e-10:
            raise DegeneratePlane("plane is degenerate for the metric")
        return float(np.einsum("abcd,a,b,c,d->", self.riemann, a, b, b, a)) / den

    def to_json(self) -> dict:
        from .serialize import point_to_json
        from .cheeger import spec_to_json

        return {
            "point": point_to_json(self.point),
            "metric_spec": spec_to_json(self.spec),
            "christoffel": self.christoffel.tolist(),
            "riemann": self.riemann.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar,
        }


def curvature_report(p: M.ManifoldPoint, spec: MetricSpec, chart: Chart = None) -> CurvatureReport:
    chart = chart or build_chart(p)
    u = np.zeros(chart.dim)
    g, dg, ddg = _derivatives(chart, u, spec)
    if abs(np.linalg.det(g)) < 1e-12:
        raise DegenerateMetric("singular metric components")
    Gam = _christoffel_from(g, dg)
    R = _riemann_from(g, dg, ddg)
    ginv = np.linalg.inv(g)
    ric = np.einsum("ad,abcd->bc", ginv, R)
    ric = 0.5 * (ric + ric.T)
    scal = float(np.einsum("bc,bc->", ginv, ric))
    return CurvatureReport(p, spec, g, Gam, R, ric, scal, chart)


def riemann(chart: Chart, u, spec: MetricSpec) -> np.ndarray:
    g, dg, ddg = _derivatives(chart, u, spec)
    return _riemann_from(g, dg, ddg)


def ricci(chart: Chart, u, spec: MetricSpec) -> np.ndarray:
    g, dg, ddg = _derivatives(chart, u, spec)
    R = _riemann_from(g, dg, ddg)
    return np.einsum("ad,abcd->bc", np.linalg.inv(g), R)


def scalar(chart: Chart, u, spec: MetricSpec) -> float:
    g, dg, ddg = _derivatives(chart, u, spec)
    ginv = np.linalg.inv(g)
    ric = np.einsum("ad,abcd->bc", ginv, _riemann_from(g, dg, ddg))
    return float(np.einsum("bc,bc->", ginv, ric))


def numeric_sectional(spec: MetricSpec, v: M.TangentVector, w: M.TangentVector) -> float:
    return curvature_report(v.base, spec).sectional(v, w)


# ---------------------------------------------------------------------------
# closed-form curvature of the base metrics

def _sp2_algebra(p: M.ManifoldPoint, v) -> np.ndarray:
    pm = p.coords.reshape(2, 2, 4)
    return Q.qmat_mul(Q.qmat_adj(pm), np.asarray(v, dtype=float).reshape(2, 2, 4))


def _bracket(a, b):
    return Q.qmat_mul(a, b) - Q.qmat_mul(b, a)


def star_oneill(p: M.ManifoldPoint, X, Y) -> np.ndarray:
    """A_XY for the star submersion Sp2 -> Sigma: star-vertical part of nabla_X of h(Y)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    h = 1e-6
    cp = M.retract_array("sp2", p.flat + h * X, check=False)
    cm = M.retract_array("sp2", p.flat - h * X, check=False)
    dY = (M.star_horizontal_project(cp.reshape(4, 4), Y.reshape(4, 4))
          - M.star_horizontal_project(cm.reshape(4, 4), Y.reshape(4, 4))).reshape(-1) / (2 * h)
    return dY - M.star_horizontal_project(p.coords, dY.reshape(4, 4)).reshape(-1)


def base_riemann(p: M.ManifoldPoint, X, Y, Z, W) -> float:
    """R_g(X, Y, Z, W) for the base metric of each model (closed form)."""
    X, Y, Z, W = (np.asarray(a, dtype=float) for a in (X, Y, Z, W))
    m = p.model
    if m == "minkowski":
        return 0.0
    if m in ("su2", "s7"):
        return float((Y @ Z) * (X @ W) - (X @ Z) * (Y @ W))
    if m == "sp2":
        xi, eta, zeta, om = (_sp2_algebra(p, a) for a in (X, Y, Z, W))
        return float(-0.25 * np.sum(_bracket(_bracket(xi, eta), zeta) * om))
    # sigma: O'Neill's formula for the star submersion on horizontal vectors
    sp = M.ManifoldPoint("sp2", p.coords)
    base = base_riemann(sp, X, Y, Z, W)
    A = lambda a, b: star_oneill(p, a, b)
    return float(base - 2 * A(X, Y) @ A(Z, W) + A(Y, Z) @ A(X, W) - A(X, Z) @ A(Y, W))


# ---------------------------------------------------------------------------
# submersion tensors of a circle action (base metric g)

def _killing_P(p: M.ManifoldPoint, action: str):
    K = killing(p.model, action, p.flat)
    P = float(K @ K)
    if P < EPS_P:
        raise NotPrincipal("action field vanishes at this point")
    return K, P


def _curve(p: M.ManifoldPoint, X, s):
    if p.model == "minkowski":
        return p.flat + s * X
    return M.retract_array("sp2" if p.model == "sigma" else p.model, p.flat + s * X, check=False)


def horizontal_projector(model: str, action: str, x, v) -> np.ndarray:
    """Tangent projection followed by removal of the action-field component."""
    x = np.asarray(x, dtype=float)
    t = M.project_array(model, x, v)
    K = killing(model, action, x)
    return t - (t @ K) / (K @ K) * K


def _dfield(p, X, fn, h=1e-6):
    return (fn(_curve(p, X, h)) - fn(_curve(p, X, -h))) / (2 * h)


def oneill_A(X: M.TangentVector, Y: M.TangentVector, action: str, base=None) -> M.TangentVector:
    """A_XY = 1/2 [X~, Y~]^v with X~, Y~ horizontal projections of constant fields."""
    p = X.base
    K, P = _killing_P(p, action)
    DY = _dfield(p, X.flat, lambda x: horizontal_projector(p.model, action, x, Y.flat))
    DX = _dfield(p, Y.flat, lambda x: horizontal_projector(p.model, action, x, X.flat))
    br = DY - DX
    return M.TangentVector(p, 0.5 * (br @ K) / P * K)


def a_star(X: M.TangentVector, V: M.TangentVector, action: str, base=None) -> M.TangentVector:
    """A*_X V = -h(nabla_X V~), V~ the action field with constant coefficient.

    Satisfies g(A_X Y, V) = g(Y, A*_X V).
    """
    p = X.base
    K, P = _killing_P(p, action)
    lam = float(V.flat @ K) / P
    DK = _dfield(p, X.flat, lambda x: killing(p.model, action, x))
    return M.TangentVector(p, -lam * horizontal_projector(p.model, action, p.flat, DK))


def shape_S(X: M.TangentVector, V: M.TangentVector, action: str, base=None) -> M.TangentVector:
    """S_X V = -(nabla_V X~)^v for the invariant (basic) extension of X."""
    p = X.base
    K, P = _killing_P(p, action)
    if p.model == "minkowski":
        return M.TangentVector(p, np.zeros_like(p.flat))
    lam = float(V.flat @ K) / P
    act = M.get_action(p.model, action)
    k = M.N_QUAT[p.model]
    # derivative of the transported vector along the orbit; the actions are linear
    D = act.field_fn(Q.E_I, X.flat.reshape(k, 4)).reshape(-1)
    if p.model == "sigma":
        F = M.star_fields(p.coords)
        Kb = act.field_fn(Q.E_I, p.coords).reshape(-1)
        u = np.linalg.solve(F @ F.T, F @ Kb)
        # remove the star motion that the bullet orbit carries along with it
        for j, U in enumerate(Q.IMAG_BASIS):
            D = D - u[j] * M._field_star(U, X.flat.reshape(4, 4)).reshape(-1)
    return M.TangentVector(p, -lam * (D @ K) / P * K)
