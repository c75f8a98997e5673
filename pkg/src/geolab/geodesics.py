"""Geodesics of the deformed metrics and transport along orbits.

The main integrator works in ambient coordinates.  Every metric handled
here has the form M(x) = I + f(x) k k^T on tangent vectors, with k = L x a
linear Killing field (L skew) and f a function of P = |k|^2.  Geodesics are
critical points of 1/2 xdot^T M xdot subject to the membership constraints,
which gives

    M xddot = -(grad f . xdot) s k - 2 f s L xdot + 1/2 s^2 grad f + J^T lam,
    J xddot = -xdot^T H xdot,                       s = k . xdot.

This only uses M on tangent vectors, so the off-manifold extension does not
matter.  A chart-based RK4 using the curvature-lab Christoffel symbols is
kept as an independent short-horizon check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import models as M
from . import quaternion as Q
from .cheeger import EPS_P, MetricSpec, gram_batch, killing
from .errors import BadParameter, DegenerateMetric, NotFixedPoint, NotPrincipal, StepUnderflow

EPS_FAKE = 1e-6
MIN_STEP = 1e-8
DOP_TOL = 1e-13
BAUMGARTE = 5.0


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    max_param: float = 10.0
    chart_hop_radius: float = 0.03
    tol_cons: float = 1e-6
    sample_every: int = 100
    # "rk4": fixed step with energy-triggered halving and degeneracy checks.
    # "dop853": adaptive 8th order, only for metrics with no degenerate locus.
    method: str = "rk4"

    def __post_init__(self):
        if self.method not in ("rk4", "dop853"):
            raise BadParameter(f"unknown integrator method {self.method!r}")
        if not 0 < self.step <= 1e-2:
            raise BadParameter("step must lie in (0, 1e-2]")
        if not self.chart_hop_radius < 0.05:
            raise BadParameter("chart_hop_radius must be below the chart radius")


@dataclass(eq=False)
class GeodesicTrace:
    model: str
    spec: MetricSpec
    s: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    energy: np.ndarray
    killing_charge: np.ndarray
    causal: M.CausalClass
    aborted: Optional[str] = None

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    @property
    def killing_drift(self) -> float:
        return float(np.max(np.abs(self.killing_charge - self.killing_charge[0])))

    @property
    def constraint_violation(self) -> float:
        c = M.constraints("sp2" if self.model == "sigma" else self.model, self.points)
        return float(np.max(np.abs(c), initial=0.0))

    def samples(self):
        for s, x, v in zip(self.s, self.points, self.velocities):
            p = M.ManifoldPoint(self.model, x)
            yield float(s), p, M.TangentVector(p, v)


# ---------------------------------------------------------------------------
# linear field data for each metric

def _field_matrix(model: str, action: str) -> np.ndarray:
    """Matrix L with killing(x) = L x (all actions used here are linear)."""
    n = 4 * M.N_QUAT[model]
    L = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        L[:, j] = killing(model, action, e)
    return L


@dataclass(frozen=True, eq=False)
class _Form:
    """f(P) k k^T with k = L x, or a constant-coefficient variant."""
    L: np.ndarray
    t: float
    const_coef: Optional[float]
    const_k: Optional[np.ndarray]


def _form_for(spec: MetricSpec) -> Optional[_Form]:
    model = spec.model
    if spec.kind in ("Ambient", "QuotientSubmersion") or (spec.kind == "Cheeger" and spec.t == 0):
        return None
    if spec.kind == "Cheeger":
        if model == "sigma":
            raise BadParameter("geodesics of the deformed quotient metric are not supported")
        return _Form(_field_matrix(model, spec.action), spec.t, None, None)
    if spec.kind == "FixedLorentz":
        L = _field_matrix(model, "hopf")
        return _Form(L, spec.t, -spec.t / (1.0 + spec.t), None)
    if spec.kind == "Minkowski":
        c2 = M.minkowski_c2(spec.r)
        return _Form(np.zeros((4, 4)), 0.0, -(1.0 + c2), np.array([1.0, 0.0, 0.0, 0.0]))
    raise BadParameter(f"no geodesic equation for metric kind {spec.kind!r}")


def _accel(model: str, form: Optional[_Form], X, V, stab: float = 0.0):
    """Second derivative of ambient position for a batch (B, N).

    stab > 0 adds Baumgarte terms pulling the constraints back to zero,
    for integrators that do not project after every step.
    """
    cmodel = "sp2" if model == "sigma" else model
    B, N = X.shape
    if form is None:
        f = np.zeros(B)
        k = np.zeros_like(X)
        rhs = np.zeros_like(X)
    else:
        if form.const_k is not None:
            k = np.broadcast_to(form.const_k, X.shape)
            Lv = np.zeros_like(X)
        else:
            k = X @ form.L.T
            Lv = V @ form.L.T
        s = np.sum(k * V, axis=1)
        if form.const_coef is not None:
            f = np.full(B, form.const_coef)
            gf = np.zeros_like(X)
        else:
            P = np.sum(k * k, axis=1)
            d = 1.0 + form.t * P
            f = -form.t / d
            # grad P = 2 L^T k
            gf = (form.t**2 / d**2)[:, None] * 2.0 * (k @ form.L)
        rhs = -(np.sum(gf * V, axis=1) * s)[:, None] * k - 2.0 * (f * s)[:, None] * Lv + 0.5 * (s * s)[:, None] * gf
    # M^-1 = I - f/(1 + f P) k k^T
    Pk = np.sum(k * k, axis=1)
    coef = f / (1.0 + f * Pk)

    def minv(Y):
        return Y - (coef * np.sum(k * Y, axis=1))[:, None] * k

    if cmodel == "minkowski":
        return minv(rhs)
    if cmodel in ("su2", "s7"):
        J = 2.0 * X[:, None, :]
    else:
        J = np.stack([M.constraint_jacobian("sp2", x) for x in X])
    hess = M.constraint_hessian_form(cmodel, V)
    Mr = minv(rhs)
    MJ = np.stack([minv(J[:, i, :]) for i in range(J.shape[1])], axis=1)  # (B, m, N)
    S = np.einsum("bin,bjn->bij", J, MJ)
    b = -hess - np.einsum("bin,bn->bi", J, Mr)
    if stab:
        b -= 2.0 * stab * np.einsum("bin,bn->bi", J, V) + stab**2 * M.constraints(cmodel, X)
    lam = np.linalg.solve(S, b[..., None])[..., 0]
    return Mr + np.einsum("bin,bi->bn", MJ, lam)


def _energy(spec: MetricSpec, X, V) -> np.ndarray:
    return gram_batch(spec, X, V[:, None, :])[:, 0, 0]


def _energy_form(form: Optional[_Form], X, V) -> np.ndarray:
    """Same value as _energy, computed from the quadratic-form data."""
    e = np.sum(V * V, axis=1)
    if form is None:
        return e
    if form.const_k is not None:
        k = np.broadcast_to(form.const_k, X.shape)
    else:
        k = X @ form.L.T
    s = np.sum(k * V, axis=1)
    if form.const_coef is not None:
        return e + form.const_coef * s * s
    P = np.sum(k * k, axis=1)
    return e - form.t / (1.0 + form.t * P) * s * s


def _charge(spec: MetricSpec, action: Optional[str], X, V) -> np.ndarray:
    if action is None:
        return np.zeros(X.shape[0])
    K = killing(spec.model, action, X)
    return gram_batch(spec, X, np.stack([V, K], axis=1))[:, 0, 1]


def _charge_action(spec: MetricSpec) -> Optional[str]:
    if spec.action is not None:
        return spec.action
    return {"su2": "su2-conj", "s7": "s7-star", "sp2": "sp2-bullet", "minkowski": "translation"}.get(spec.model)


def _clean(model: str, X, V):
    cmodel = "sp2" if model == "sigma" else model
    if cmodel == "minkowski":
        return X, V
    Xr = M.retract_array(cmodel, X, check=False)
    Vr = M.project_array(cmodel, Xr, V)
    return Xr, Vr


def _rk4(model, form, X, V, h):
    a1 = _accel(model, form, X, V)
    k1x, k1v = V, a1
    a2 = _accel(model, form, X + 0.5 * h * k1x, V + 0.5 * h * k1v)
    k2x, k2v = V + 0.5 * h * k1v, a2
    a3 = _accel(model, form, X + 0.5 * h * k2x, V + 0.5 * h * k2v)
    k3x, k3v = V + 0.5 * h * k2v, a3
    a4 = _accel(model, form, X + h * k3x, V + h * k3v)
    k4x, k4v = V + h * k3v, a4
    Xn = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    Vn = V + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return _clean(model, Xn, Vn)


def _deg_state(spec: MetricSpec, form: Optional[_Form], X):
    """Sign of 1 + tP, or None when the metric cannot degenerate."""
    if spec.kind != "Cheeger" or form is None:
        return None
    k = X @ form.L.T
    P = np.sum(k * k, axis=1)
    return P, np.sign(1.0 + spec.t * P)


def integrate_batch(X0, V0, spec: MetricSpec, cfg: IntegratorConfig = IntegratorConfig()) -> List[GeodesicTrace]:
    """Integrate many geodesics at once; aborted traces are frozen and flagged."""
    model = spec.model
    X = np.array(X0, dtype=float, ndmin=2)
    V = np.array(V0, dtype=float, ndmin=2)
    if model == "sigma":
        V = M.star_horizontal_project(X.reshape(-1, 4, 4), V.reshape(-1, 4, 4)).reshape(V.shape)
    B = X.shape[0]
    form = _form_for(spec)
    action = _charge_action(spec)
    n_steps = int(round(cfg.max_param / cfg.step))
    aborted: List[Optional[str]] = [None] * B
    deg0 = _deg_state(spec, form, X)
    if deg0 is not None:
        bad = (deg0[0] < EPS_P) | (np.abs(1.0 + spec.t * deg0[0]) < 1e-12)
        if np.any(bad):
            raise DegenerateMetric("initial point lies on the degenerate locus")
    if cfg.method == "dop853" and deg0 is not None:
        raise BadParameter("dop853 is only available for metrics without a degenerate locus")
    E0 = _energy(spec, X, V)
    causal = []
    for e, v in zip(E0, V):
        if np.linalg.norm(v) < 1e-12:
            causal.append(M.CausalClass.Zero)
        elif e < -1e-9:
            causal.append(M.CausalClass.TimeLike)
        elif e > 1e-9:
            causal.append(M.CausalClass.SpaceLike)
        else:
            causal.append(M.CausalClass.LightLike)
    spike = lambda E, En: np.abs(En - E) > 1e-11 * np.maximum(1.0, np.abs(E))

    def step(X, V, h, live):
        # rows whose energy jumps are redone as two half steps, recursively
        Xn, Vn = _rk4(model, form, X, V, h)
        E, En = _energy_form(form, X, V), _energy_form(form, Xn, Vn)
        redo = spike(E, En) & live
        if np.any(redo):
            if h / 2 < MIN_STEP:
                raise StepUnderflow("step halving reached 1e-8")
            idx = np.nonzero(redo)[0]
            ones = np.ones(len(idx), dtype=bool)
            Xm, Vm = step(X[idx], V[idx], h / 2, ones)
            Xn[idx], Vn[idx] = step(Xm, Vm, h / 2, ones)
        return Xn, Vn

    alive = np.ones(B, dtype=bool)
    if cfg.method == "dop853":
        S, PX, PV = _run_dop853(model, form, X, V, cfg, aborted)
        return _collect(spec, action, model, S, PX, PV, causal, aborted, deg0)
    rec_s = [0.0]
    rec_X = [X.copy()]
    rec_V = [V.copy()]
    s = 0.0
    for i in range(1, n_steps + 1):
        Xn, Vn = step(X, V, cfg.step, alive)
        ok = np.all(np.isfinite(Xn), axis=1) & np.all(np.isfinite(Vn), axis=1)
        if deg0 is not None:
            P, sg = _deg_state(spec, form, np.where(ok[:, None], Xn, X))
            crossed = (sg != deg0[1]) | (P < EPS_P)
            for b in np.nonzero(alive & crossed)[0]:
                aborted[b] = "DegenerateMetric"
            ok &= ~crossed
        for b in np.nonzero(alive & ~ok)[0]:
            aborted[b] = aborted[b] or "NonFinite"
        alive &= ok
        X = np.where(alive[:, None], Xn, X)
        V = np.where(alive[:, None], Vn, V)
        s = i * cfg.step
        if i % cfg.sample_every == 0 or i == n_steps:
            rec_s.append(s)
            rec_X.append(X.copy())
            rec_V.append(V.copy())
        if not alive.any():
            break
    S = np.array(rec_s)
    PX = np.stack(rec_X, axis=1)  # (B, S, N)
    PV = np.stack(rec_V, axis=1)
    return _collect(spec, action, model, S, PX, PV, causal, aborted, deg0)


def _run_dop853(model, form, X, V, cfg: IntegratorConfig, aborted):
    """Batched DOP853 between sample times, projecting back onto the manifold at each one."""
    B, N = X.shape

    def rhs(_, y):
        x, v = y[:B * N].reshape(B, N), y[B * N:].reshape(B, N)
        return np.concatenate([v.ravel(), _accel(model, form, x, v, BAUMGARTE).ravel()])

    chunk = cfg.step * cfg.sample_every
    n_chunks = int(math.ceil(cfg.max_param / chunk - 1e-9))
    rec_s, rec_X, rec_V = [0.0], [X.copy()], [V.copy()]
    for i in range(n_chunks):
        s0, s1 = i * chunk, min((i + 1) * chunk, cfg.max_param)
        sol = solve_ivp(rhs, (s0, s1), np.concatenate([X.ravel(), V.ravel()]), method="DOP853",
                        rtol=DOP_TOL, atol=DOP_TOL, max_step=max(cfg.step, chunk / 2))
        y = sol.y[:, -1]
        if not sol.success or not np.all(np.isfinite(y)):
            for b in range(B):
                aborted[b] = "NonFinite"
            break
        X, V = _clean(model, y[:B * N].reshape(B, N), y[B * N:].reshape(B, N))
        rec_s.append(s1)
        rec_X.append(X.copy())
        rec_V.append(V.copy())
    return np.array(rec_s), np.stack(rec_X, axis=1), np.stack(rec_V, axis=1)


def _collect(spec, action, model, S, PX, PV, causal, aborted, deg0) -> List[GeodesicTrace]:
    B = PX.shape[0]
    traces = []
    for b in range(B):
        E = _energy(spec, PX[b], PV[b]) if deg0 is None or aborted[b] is None else _safe_energy(spec, PX[b], PV[b])
        Kc = _charge(spec, action, PX[b], PV[b]) if aborted[b] is None else np.zeros(len(S))
        traces.append(GeodesicTrace(model, spec, S, PX[b], PV[b], E, Kc, causal[b], aborted[b]))
    return traces


def _safe_energy(spec, X, V):
    out = np.full(X.shape[0], np.nan)
    for i in range(X.shape[0]):
        try:
            out[i] = _energy(spec, X[i:i + 1], V[i:i + 1])[0]
        except DegenerateMetric:
            pass
    return out


def integrate(p: M.ManifoldPoint, v: M.TangentVector, spec: MetricSpec,
              cfg: IntegratorConfig = IntegratorConfig()) -> GeodesicTrace:
    """Single geodesic; raises DegenerateMetric if it runs into the degenerate locus."""
    tr = integrate_batch(p.flat[None], v.flat[None], spec, cfg)[0]
    if tr.aborted == "DegenerateMetric":
        raise DegenerateMetric("geodesic reached the degenerate locus")
    return tr


# ---------------------------------------------------------------------------
# chart-based integrator (curvature-lab Christoffel symbols)

def integrate_chart(p: M.ManifoldPoint, v: M.TangentVector, spec: MetricSpec,
                    cfg: IntegratorConfig = IntegratorConfig(step=1e-2, max_param=1.0)) -> GeodesicTrace:
    from .curvature import build_chart, christoffel_first

    chart = build_chart(p)
    u = np.zeros(chart.dim)
    du = chart.frame @ v.flat

    def acc(u, du):
        g, G = christoffel_first(chart, u, spec)
        if abs(np.linalg.det(g)) < 1e-10:
            raise DegenerateMetric("singular metric components")
        return -np.einsum("kij,i,j->k", G, du, du)

    n_steps = int(round(cfg.max_param / cfg.step))
    rec = [(0.0, p.flat.copy(), v.flat.copy())]
    h = cfg.step
    for i in range(1, n_steps + 1):
        # Runge-Kutta-Nystrom stages
        a1 = acc(u, du)
        um = u + 0.5 * h * du + h * h / 8 * a1
        a2 = acc(um, du + 0.5 * h * a1)
        a3 = acc(um, du + 0.5 * h * a2)
        a4 = acc(u + h * du + h * h / 2 * a3, du + h * a3)
        u = u + h * du + h * h / 6 * (a1 + a2 + a3)
        du = du + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        x = chart.param(u)
        vel = chart.pushforward(u).T @ du
        if np.linalg.norm(u) > cfg.chart_hop_radius:
            # re-center and express the velocity in the new frame
            chart = build_chart(M.ManifoldPoint(p.model, x))
            u = np.zeros(chart.dim)
            du = chart.frame @ vel
        if i % cfg.sample_every == 0 or i == n_steps:
            rec.append((i * h, x.copy(), vel.copy()))
    S = np.array([r[0] for r in rec])
    X = np.array([r[1] for r in rec])
    V = np.array([r[2] for r in rec])
    E = _energy(spec, X, V)
    action = _charge_action(spec)
    Kc = _charge(spec, action, X, V)
    causal = _classify(E[0], V[0])
    return GeodesicTrace(p.model, spec, S, X, V, E, Kc, causal)


def _classify(e, v):
    if np.linalg.norm(v) < 1e-12:
        return M.CausalClass.Zero
    if e < -1e-9:
        return M.CausalClass.TimeLike
    if e > 1e-9:
        return M.CausalClass.SpaceLike
    return M.CausalClass.LightLike


# ---------------------------------------------------------------------------
# completeness

@dataclass
class CompletenessReport:
    n_traces: int
    n_aborted: int
    max_constraint: float
    max_energy_drift: float
    max_killing_drift: float
    max_speed: float
    causal_counts: dict
    traces: list = field(repr=False, default_factory=list)

    @property
    def complete(self) -> bool:
        return self.n_aborted == 0 and np.isfinite(self.max_speed)


def sample_causal_vector(spec: MetricSpec, p: M.ManifoldPoint, want: M.CausalClass,
                         rng: np.random.Generator, max_tries: int = 10000) -> M.TangentVector:
    """Random tangent vector of the requested causal type, normalized to |g(v,v)| = 1."""
    for _ in range(max_tries):
        v = M.random_tangent(p, rng)
        e = _energy(spec, p.flat[None], v.flat[None])[0]
        if want == M.CausalClass.TimeLike and e < -1e-3:
            return M.TangentVector(p, v.flat / math.sqrt(-e))
        if want == M.CausalClass.SpaceLike and e > 1e-3:
            return M.TangentVector(p, v.flat / math.sqrt(e))
    raise BadParameter(f"no {want.value} vector found at this point")


def completeness_probe(model: str, spec: MetricSpec, n_traces: int, horizon: float,
                       rng: np.random.Generator, cfg: Optional[IntegratorConfig] = None) -> CompletenessReport:
    """n_traces time-like and n_traces space-like geodesics out to `horizon`."""
    if cfg is None:
        method = "rk4" if spec.kind == "Cheeger" else "dop853"
        cfg = IntegratorConfig(step=1e-2, sample_every=1000, method=method)
    cfg = IntegratorConfig(cfg.step, horizon, cfg.chart_hop_radius, cfg.tol_cons, cfg.sample_every, cfg.method)
    X, V = [], []
    for want in (M.CausalClass.TimeLike, M.CausalClass.SpaceLike):
        n = 0
        while n < n_traces:
            if spec.kind == "Cheeger":
                p = M.random_principal_point(model, spec.action, rng)
            else:
                p = M.random_point(model, rng)
            try:
                v = sample_causal_vector(spec, p, want, rng, max_tries=200)
            except BadParameter:
                continue
            X.append(p.flat)
            V.append(v.flat)
            n += 1
    traces = integrate_batch(np.array(X), np.array(V), spec, cfg)
    counts = {}
    for tr in traces:
        counts[tr.causal.value] = counts.get(tr.causal.value, 0) + 1
    ok = [tr for tr in traces if tr.aborted is None]
    return CompletenessReport(
        n_traces=len(traces),
        n_aborted=sum(tr.aborted is not None for tr in traces),
        max_constraint=max((tr.constraint_violation for tr in ok), default=0.0),
        max_energy_drift=max((tr.energy_drift for tr in ok), default=0.0),
        max_killing_drift=max((tr.killing_drift for tr in ok), default=0.0),
        max_speed=max((float(np.max(np.linalg.norm(tr.velocities, axis=1))) for tr in ok), default=0.0),
        causal_counts=counts,
        traces=traces,
    )


# ---------------------------------------------------------------------------
# transport along orbits and horizontal geodesics

def _dproj(model: str, x, c, v, h=1e-6):
    """Derivative of the tangent projector along c, applied to v."""
    cm = "sp2" if model == "sigma" else model
    xp = M.retract_array(cm, x + h * c, check=False)
    xm = M.retract_array(cm, x - h * c, check=False)
    return (M.project_array(model, xp, v) - M.project_array(model, xm, v)) / (2 * h)


def _rk4_linear(f, y, h):
    k1 = f(0.0, y)
    k2 = f(0.5 * h, y + 0.5 * h * k1)
    k3 = f(0.5 * h, y + 0.5 * h * k2)
    k4 = f(h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class Transport:
    s: np.ndarray
    points: np.ndarray
    field: np.ndarray


def holonomy_transport(X0: M.TangentVector, action: str, angle: float = 2 * math.pi,
                       n_steps: int = 400) -> Transport:
    """Solve nabla_gamma' X = -A*_X gamma' - S_X gamma' along the orbit gamma(s) = e^{is} p."""
    from .curvature import a_star, shape_S

    p = X0.base
    model = p.model
    if not M.vertical_space(model, action, p):
        raise NotPrincipal("orbit through a fixed point")
    act = M.get_action(model, action)
    h = angle / n_steps

    def gamma(s):
        return act.apply(Q.circle(s), p.coords).reshape(-1)

    def rhs(s, X):
        x = gamma(s)
        q = M.ManifoldPoint(model, x)
        g1 = killing(model, action, x)
        Xt = M.TangentVector(q, X)
        G1 = M.TangentVector(q, g1)
        cov = -a_star(Xt, G1, action).flat - shape_S(Xt, G1, action).flat
        return cov + _dproj(model, x, g1, X)

    S = [0.0]
    pts = [gamma(0.0)]
    F = [X0.flat.copy()]
    X = X0.flat.copy()
    for i in range(n_steps):
        s0 = i * h
        X = _rk4_linear(lambda ds, y: rhs(s0 + ds, y), X, h)
        S.append(s0 + h)
        pts.append(gamma(s0 + h))
        F.append(X.copy())
    return Transport(np.array(S), np.array(pts), np.array(F))


def horizontal_geodesic(p: M.ManifoldPoint, X) -> callable:
    """Great circle through p with unit initial velocity along X (round spheres)."""
    if p.model not in ("su2", "s7"):
        raise BadParameter("horizontal geodesics are closed-form on round spheres only")
    X = np.asarray(X, dtype=float)
    X = X / np.linalg.norm(X)
    x0 = p.flat
    return lambda s: (math.cos(s) * x0 + math.sin(s) * X, -math.sin(s) * x0 + math.cos(s) * X)


def dual_holonomy_transport(nu0: M.TangentVector, direction: M.TangentVector, action: str,
                            length: float = 2.0, n_steps: int = 400) -> Transport:
    """Solve nabla_c' nu = S_c' nu - A*_c' nu along a horizontal geodesic c."""
    from .curvature import a_star, shape_S

    p = nu0.base
    model = p.model
    if not M.vertical_space(model, action, p):
        raise NotPrincipal("fixed point")
    c = horizontal_geodesic(p, direction.flat)
    h = length / n_steps

    def rhs(s, nu):
        x, cd = c(s)
        q = M.ManifoldPoint(model, x)
        C = M.TangentVector(q, cd)
        N = M.TangentVector(q, nu)
        cov = shape_S(C, N, action).flat - a_star(C, N, action).flat
        return cov + _dproj(model, x, cd, nu)

    S = [0.0]
    pts = [p.flat.copy()]
    F = [nu0.flat.copy()]
    nu = nu0.flat.copy()
    for i in range(n_steps):
        s0 = i * h
        nu = _rk4_linear(lambda ds, y: rhs(s0 + ds, y), nu, h)
        S.append(s0 + h)
        pts.append(c(s0 + h)[0])
        F.append(nu.copy())
    return Transport(np.array(S), np.array(pts), np.array(F))


# ---------------------------------------------------------------------------
# dual leaves

@dataclass
class DualLeafReport:
    reached_vertical_rank: int
    covering_dimension: int
    manifold_dimension: int
    singular_values: np.ndarray = field(repr=False)

    @property
    def single_leaf(self) -> bool:
        return self.covering_dimension == self.manifold_dimension


def _walk(p: M.ManifoldPoint, action: str, rng, n_segments: int, seg: float, sub: int = 8):
    from .curvature import horizontal_projector

    model = p.model
    cm = "sp2" if model == "sigma" else model
    x = p.flat.copy()
    for _ in range(n_segments):
        W = rng.standard_normal(x.size)
        h = seg / sub

        def f(y):
            d = horizontal_projector(model, action, y, W)
            return d / np.linalg.norm(d)

        for _ in range(sub):
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if cm != "minkowski":
                x = M.retract_array(cm, x, check=False)
    return x


def dual_leaf_probe(p: M.ManifoldPoint, action: str, n_steps: int = 200, rng=None,
                    n_segments: int = 4, seg: float = 0.05) -> DualLeafReport:
    """Rank of span{A_X Y} at p and the local dimension of horizontally reachable points."""
    from .curvature import oneill_A

    rng = rng or np.random.default_rng(0)
    H = [h.flat for h in M.horizontal_space(p.model, action, p)]
    vecs = []
    for i in range(len(H)):
        for j in range(i + 1, len(H)):
            vecs.append(oneill_A(M.TangentVector(p, H[i]), M.TangentVector(p, H[j]), action).flat)
    rank = int(np.linalg.matrix_rank(np.array(vecs), tol=1e-8)) if vecs else 0
    T = M.tangent_basis(p.model, p)
    cloud = np.array([T @ (_walk(p, action, rng, n_segments, seg) - p.flat) for _ in range(n_steps)])
    sv = np.linalg.svd(cloud, compute_uv=False)
    dim = int(np.sum(sv > 1e-6 * sv[0]))
    return DualLeafReport(rank, dim, T.shape[0], sv)


# ---------------------------------------------------------------------------
# fixed points

def fake_horizontal_value(x: M.ManifoldPoint, X: M.TangentVector, action: str) -> np.ndarray:
    """S~_X(i) = nabla_X i^*: tangent part of the derivative of the action field along X/|X|."""
    d = X.flat / np.linalg.norm(X.flat)
    h = 1e-6
    cm = "sp2" if x.model == "sigma" else x.model
    xp = M.retract_array(cm, x.flat + h * d, check=False) if cm != "minkowski" else x.flat + h * d
    xm = M.retract_array(cm, x.flat - h * d, check=False) if cm != "minkowski" else x.flat - h * d
    D = (killing(x.model, action, xp) - killing(x.model, action, xm)) / (2 * h)
    return M.project_array(x.model, x.flat, D)


def fake_horizontal_classify(x: M.ManifoldPoint, X: M.TangentVector, action: str, base=None) -> str:
    if M.vertical_space(x.model, action, x):
        raise NotFixedPoint("point is not fixed by the action")
    val = fake_horizontal_value(x, X, action)
    return "FullAlgebra" if np.linalg.norm(val) < EPS_FAKE else "TrivialAlgebra"
