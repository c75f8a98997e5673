"""Cheeger deformations of circle actions with negative parameter.

For an isometric circle action with action field K (the field of U = i,
Q(i, i) = 1) and orbit tensor P = |K|^2, the deformed metric is

    g_t(v, w) = g(v, w) - t g(v, K) g(w, K) / (1 + tP),

which rescales the vertical line by (1 + tP)^-1 and leaves the horizontal
space alone.  With t = -r^2 and r^2 > 1 the vertical direction turns
time-like wherever 1 + tP < 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import models as M
from . import quaternion as Q
from .errors import (
    BadDirection,
    BadParameter,
    DegenerateMetric,
    NotFixedPoint,
    NotPrincipal,
    SingularDeformation,
)

EPS_NULL = 1e-9
EPS_P = 1e-12  # |K|^2 below this counts as a fixed point
EPS_SING = 1e-12

KINDS = ("Ambient", "Cheeger", "FixedLorentz", "KaluzaKlein", "QuotientSubmersion", "Minkowski")


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    t: Optional[float] = None
    model: str = "su2"
    action: Optional[str] = None
    r: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParameter(f"unknown metric kind {self.kind!r}")
        if self.kind in ("Cheeger", "FixedLorentz") and self.t is None:
            raise BadParameter(f"{self.kind} needs a parameter t")
        if self.kind in ("KaluzaKlein", "Minkowski") and self.r is None:
            raise BadParameter(f"{self.kind} needs a parameter r")
        if self.kind == "Cheeger" and self.action is None:
            raise BadParameter("Cheeger metric needs an action")
        if self.kind == "FixedLorentz" and self.model not in ("su2", "s7"):
            raise BadParameter("FixedLorentz is defined on su2 and s7")
        if self.kind == "Minkowski" and self.model != "minkowski":
            raise BadParameter("Minkowski metric lives on the minkowski model")

    @classmethod
    def cheeger(cls, model: str, action: str, t: float) -> "MetricSpec":
        return cls("Cheeger", t=t, model=model, action=action)

    @property
    def lorentzian_parameter(self) -> bool:
        return self.kind in ("Cheeger", "FixedLorentz") and self.t is not None and self.t < -1


@dataclass(frozen=True)
class OrbitTensor:
    dim: int
    value: float


# ---------------------------------------------------------------------------
# basic quantities

def killing(spec_or_model, action: str, x) -> np.ndarray:
    model = spec_or_model.model if isinstance(spec_or_model, MetricSpec) else spec_or_model
    x = np.asarray(x, dtype=float)
    k = M.N_QUAT[model]
    return M.killing_array(model, action, x.reshape(x.shape[:-1] + (k, 4))).reshape(x.shape)


def orbit_tensor(p: M.ManifoldPoint, action: str, base=None) -> OrbitTensor:
    K = killing(p.model, action, p.flat)
    P = float(K @ K)
    if P < EPS_P:
        return OrbitTensor(0, 0.0)
    return OrbitTensor(1, P)


def p_t(P, t: float) -> float:
    value = P.value if isinstance(P, OrbitTensor) else float(P)
    d = 1.0 + t * value
    if abs(d) < EPS_SING:
        raise SingularDeformation("1 + tP vanishes")
    return value / d


def _split(p: M.ManifoldPoint, action: str, v):
    K = killing(p.model, action, p.flat)
    P = float(K @ K)
    if P < EPS_P:
        raise NotPrincipal("action field vanishes at this point")
    lam = float(v @ K) / P
    return v - lam * K, lam, K, P


def c_t_apply(v: M.TangentVector, t: float, action: str, base=None) -> M.TangentVector:
    x, lam, K, P = _split(v.base, action, v.flat)
    d = 1.0 + t * P
    if abs(d) < EPS_SING:
        raise SingularDeformation("1 + tP vanishes")
    return M.TangentVector(v.base, x + lam * K / d)


def c_t_inverse(v: M.TangentVector, t: float, action: str) -> M.TangentVector:
    x, lam, K, P = _split(v.base, action, v.flat)
    return M.TangentVector(v.base, x + lam * (1.0 + t * P) * K)


def _hopf_unit(x: np.ndarray) -> np.ndarray:
    k = x.shape[-1] // 4
    xs = x.reshape(x.shape[:-1] + (k, 4))
    return Q.qmul(Q.E_I, xs).reshape(x.shape)


def gram_batch(spec: MetricSpec, X, V) -> np.ndarray:
    """Gram matrices g(V_a, V_b) at many points.

    X has shape (B, N) and V shape (B, m, N); returns (B, m, m).
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    G = V @ np.swapaxes(V, -1, -2)
    kind = spec.kind
    if kind in ("Ambient", "QuotientSubmersion") or (kind == "Cheeger" and spec.t == 0):
        return G
    if kind == "Minkowski":
        c2 = M.minkowski_c2(spec.r)
        return G - (1.0 + c2) * V[..., :, 0:1] * V[..., None, :, 0]
    if kind == "FixedLorentz":
        H = _hopf_unit(X)
        vk = np.einsum("...mn,...n->...m", V, H)
        coef = -spec.t / (1.0 + spec.t)
        return G + coef * vk[..., :, None] * vk[..., None, :]
    if kind == "Cheeger":
        K = killing(spec.model, spec.action, X)
        P = np.sum(K * K, axis=-1)
        if np.any(P < EPS_P):
            raise DegenerateMetric("Cheeger metric evaluated at a fixed point")
        d = 1.0 + spec.t * P
        if np.any(np.abs(d) < EPS_SING):
            raise DegenerateMetric("1 + tP vanishes")
        vk = np.einsum("...mn,...n->...m", V, K)
        coef = -spec.t / d
        return G + coef[..., None, None] * vk[..., :, None] * vk[..., None, :]
    if kind == "KaluzaKlein":
        from .star import kaluza_klein_gram

        return kaluza_klein_gram(X, V, spec.r)
    raise BadParameter(f"cannot evaluate metric kind {kind!r}")


def gram(spec: MetricSpec, p, V) -> np.ndarray:
    x = p.flat if isinstance(p, M.ManifoldPoint) else np.asarray(p, dtype=float)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    return gram_batch(spec, x[None, :], V[None])[0]


def metric_eval(spec: MetricSpec, v: M.TangentVector, w: M.TangentVector) -> float:
    G = gram(spec, v.base, np.vstack([v.flat, w.flat]))
    return float(G[0, 1])


def su2_display_eval(v: M.TangentVector, w: M.TangentVector, r: float, action: str = "su2-conj") -> float:
    """Deformed metric on SU2 through the product SU2 x S1 with metric g - r^-2 dtheta^2.

    A tangent vector is lifted to the horizontal space of the diagonal action,
    (v + sU*, s) with s = -g(v, U*)/(P - r^-2), and the product metric is
    evaluated on the lifts.
    """
    p = v.base
    K = killing(p.model, action, p.flat)
    P = float(K @ K)
    if P < EPS_P:
        raise DegenerateMetric("fixed point")
    den = P - r**-2
    if abs(den) < EPS_SING:
        raise DegenerateMetric("1 + tP vanishes")
    s1 = -float(v.flat @ K) / den
    s2 = -float(w.flat @ K) / den
    Y1 = v.flat + s1 * K
    Y2 = w.flat + s2 * K
    return float(Y1 @ Y2 - s1 * s2 / r**2)


def signature(spec: MetricSpec, p: M.ManifoldPoint):
    """(n_positive, n_negative) of the metric on a tangent frame at p."""
    T = M.tangent_basis(p.model, p)
    ev = np.linalg.eigvalsh(gram(spec, p, T))
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


def causal_classify(spec: MetricSpec, v: M.TangentVector) -> M.CausalClass:
    if np.linalg.norm(v.flat) < 1e-12:
        return M.CausalClass.Zero
    q = metric_eval(spec, v, v)
    if q < -EPS_NULL:
        return M.CausalClass.TimeLike
    if q > EPS_NULL:
        return M.CausalClass.SpaceLike
    return M.CausalClass.LightLike


def lorentzian_region(model: str, action: str, x, r: float) -> np.ndarray:
    """Mask of points where Cheeger(-r^2) has a time-like vertical direction."""
    K = killing(model, action, np.asarray(x, dtype=float))
    return np.sum(K * K, axis=-1) > 1.0 / r**2


# ---------------------------------------------------------------------------
# curvature of g_t in closed form

def nabla_killing(p: M.ManifoldPoint, action: str, a) -> np.ndarray:
    """Ambient derivative of the action field along a (tangent parts are what matter)."""
    a = np.asarray(a, dtype=float)
    h = 1e-6
    xp = p.flat + h * a
    xm = p.flat - h * a
    return (killing(p.model, action, xp) - killing(p.model, action, xm)) / (2 * h)


def b_form(p: M.ManifoldPoint, action: str, a, b) -> float:
    """B(a, b) = g(nabla_a K, b); skew because K is Killing."""
    return float(nabla_killing(p, action, a) @ np.asarray(b, dtype=float))


def z_t(v: M.TangentVector, w: M.TangentVector, t: float, action: str, base=None) -> float:
    """3t (1+tP)^-1 |P nabla^v_v w|_Q^2; the bracket term vanishes for a circle."""
    P = orbit_tensor(v.base, action).value
    if P == 0.0:
        raise NotPrincipal("fixed point")
    d = 1.0 + t * P
    if abs(d) < EPS_SING:
        raise SingularDeformation("1 + tP vanishes")
    if t == 0:
        return 0.0
    B = b_form(v.base, action, v.flat, w.flat)
    return 3.0 * t / d * B * B


def kappa_t(v: M.TangentVector, w: M.TangentVector, t: float, action: str, base=None) -> float:
    """Unreduced sectional curvature R_{g_t}(C_t^-1 v, C_t^-1 w, C_t^-1 w, C_t^-1 v)."""
    from .curvature import base_riemann

    k0 = base_riemann(v.base, v.flat, w.flat, w.flat, v.flat)
    return k0 + z_t(v, w, t, action)


def _horizontal_frame(p: M.ManifoldPoint, action: str):
    """g-orthonormal horizontal frame e_1..e_{n-1} and the unit vertical e_n."""
    K = killing(p.model, action, p.flat)
    P = float(K @ K)
    if P < EPS_P:
        raise DegenerateMetric("fixed point")
    en = K / math.sqrt(P)
    T = M.tangent_basis(p.model, p)
    T = T - np.outer(T @ en, en)
    u, s, vt = np.linalg.svd(T, full_matrices=False)
    E = vt[s > 1e-8]
    return E, en, P


def ricci_cheeger_exact(v: M.TangentVector, t: float, action: str) -> float:
    """Ric_{g_t}(v, v) for general orbit tensor.

    With x = C_t v, e_i a g-orthonormal horizontal frame and e_n = K/|K|:
    Ric = sum_i kappa_t(e_i, x) + (1+tP)^-1 kappa_t(e_n, x).
    """
    p = v.base
    E, en, P = _horizontal_frame(p, action)
    d = 1.0 + t * P
    if abs(d) < EPS_SING:
        raise DegenerateMetric("1 + tP vanishes")
    x = c_t_apply(v, t, action).flat
    total = 0.0
    for e in E:
        total += kappa_t(M.TangentVector(p, e), M.TangentVector(p, x), t, action)
    total += kappa_t(M.TangentVector(p, en), M.TangentVector(p, x), t, action) / d
    return total


def _display_terms(v: M.TangentVector, action: str):
    """Pieces shared by the O'Neill style Ricci displays (base metric g)."""
    from .curvature import a_star, base_riemann, oneill_A

    p = v.base
    E, en, P = _horizontal_frame(p, action)
    lam = float(v.flat @ en)
    X = v.flat - lam * en
    U = lam * en
    ric_h = sum(base_riemann(p, e, X, X, e) for e in E)
    sum_aU = sum(float(np.sum(a_star(M.TangentVector(p, e), M.TangentVector(p, U), action).flat ** 2)) for e in E)
    sum_A = sum(float(np.sum(oneill_A(M.TangentVector(p, X), M.TangentVector(p, e), action).flat ** 2)) for e in E)
    aX_en = float(np.sum(a_star(M.TangentVector(p, X), M.TangentVector(p, en), action).flat ** 2))
    return ric_h, sum_aU, sum_A, aX_en


def ricci_closed_su2(v: M.TangentVector, r: float, action: str = "su2-conj") -> float:
    """Ric^h(X) + (1-r^2)^-2 sum|A*_{e_i}U*|^2 + (1-r^2)^-1 |A*_X e_3|^2 - 3r^2 (1-r^2)^-1 sum|A_X e_i|^2.

    Exact when the fibers are totally geodesic with P = 1 (Hopf action);
    elsewhere it is the same display evaluated pointwise.
    """
    if r * r <= 1:
        raise BadParameter("r^2 must exceed 1")
    if v.base.model != "su2":
        raise BadParameter("ricci_closed_su2 lives on su2")
    ric_h, sum_aU, sum_A, aX_en = _display_terms(v, action)
    s = 1.0 / (1.0 - r * r)
    return ric_h + s * s * sum_aU + s * aX_en - 3 * r * r * s * sum_A


def ricci_closed_general(v: M.TangentVector, r: float, action: str) -> float:
    """Ric_{M/G}(X) + (1-r^2)^-2 sum|A*_{e_i}U*|^2 - 3(1-r^2)^-1 sum|A_X e_i|^2 + (1-r^2)^-1 |A*_X e_n|^2."""
    if r * r <= 1:
        raise BadParameter("r^2 must exceed 1")
    ric_h, sum_aU, sum_A, aX_en = _display_terms(v, action)
    s = 1.0 / (1.0 - r * r)
    ric_quot = ric_h + 3 * sum_A
    return ric_quot + s * s * sum_aU - 3 * s * sum_A + s * aX_en


def product_coefficient(r: float, n: int) -> float:
    r2 = r * r
    if r2 <= 1:
        raise BadParameter("r^2 must exceed 1")
    return ((r2 - 1) * (n - 1) + r2**3) / (r2 * r2 * (r2 - 1))


def ricci_product(v: M.TangentVector, w_fiber: float, r: float, action: str) -> float:
    """Product-display Ricci on M x S1 with metric g - r^-2 Q.

    The tangent vector is (X + r^-2 W*, W) horizontal for the diagonal
    action plus a vertical part (U*, U).  Only sphere models carry the
    four-argument curvature this needs.
    """
    from .curvature import base_riemann

    p = v.base
    if p.model not in ("su2", "s7"):
        raise BadParameter("ricci_product needs a round sphere model")
    E, en, P = _horizontal_frame(p, action)
    K = en * math.sqrt(P)  # e_n^* for e_n = i
    n = len(E) + 1
    r2 = r * r
    lam = float(v.flat @ K) / P
    X = v.flat - lam * K
    # the M-component carries (r^-2 W + U) K and the fiber carries W + U
    W = (w_fiber - lam) / (1.0 - 1.0 / r2)
    U = w_fiber - W
    Ws = W * K
    Us = U * K
    total = product_coefficient(r, n) * base_riemann(p, X, K, K, X)
    total += sum(base_riemann(p, e, X, X, e) for e in E)
    total += sum(base_riemann(p, Ws, e, e, Ws) + base_riemann(p, Us, e, e, Us) for e in E) / r2
    total += 4 / r2 * sum(base_riemann(p, X, e, K, Ws) + r2 * base_riemann(p, X, e, K, Us) for e in E)
    return total


def vertizontal_sectional(X: M.TangentVector, V: M.TangentVector, t: float, action: str) -> float:
    """sec_{g_t}(X, V) for X horizontal and V vertical, from the closed form."""
    p = X.base
    P = orbit_tensor(p, action).value
    d = 1.0 + t * P
    Vbar = M.TangentVector(p, V.flat / d)
    num = kappa_t(X, Vbar, t, action)
    spec = MetricSpec.cheeger(p.model, action, t)
    return num / (metric_eval(spec, X, X) * metric_eval(spec, V, V))


def vertizontal_formula(X: M.TangentVector, V: M.TangentVector, r: float, action: str) -> float:
    """(1 - r^2)^-1 |A*_X V|^2 / (|X|^2 |V|^2), base-metric norms."""
    from .curvature import a_star

    a = a_star(X, V, action).flat
    return float(a @ a) / (1.0 - r * r) / (float(X.flat @ X.flat) * float(V.flat @ V.flat))


# ---------------------------------------------------------------------------
# metric at fixed points

def fixed_metric_eval(v: M.TangentVector, w: M.TangentVector, r: float, chosen_X: M.TangentVector,
                      action: str = "su2-conj") -> float:
    """g on the orthogonal complement of X plus (1 - r^2)^-1 g on the X-line."""
    from .geodesics import fake_horizontal_classify

    p = v.base
    if M.vertical_space(p.model, action, p):
        raise NotFixedPoint("base point is not fixed by the action")
    if fake_horizontal_classify(p, chosen_X, action) != "FullAlgebra":
        raise BadDirection("chosen direction is not fake horizontal")
    x = chosen_X.flat / np.linalg.norm(chosen_X.flat)
    a, b = v.flat, w.flat
    ax, bx = float(a @ x), float(b @ x)
    return float(a @ b) - ax * bx + ax * bx / (1.0 - r * r)


# ---------------------------------------------------------------------------
# serialization

def spec_to_json(spec: MetricSpec) -> dict:
    value = spec.r if spec.kind in ("KaluzaKlein", "Minkowski") else spec.t
    return {"kind": spec.kind, "t_or_r": value, "model": spec.model, "action": spec.action}


def spec_from_json(d: dict) -> MetricSpec:
    kind = d["kind"]
    value = d.get("t_or_r")
    if kind in ("KaluzaKlein", "Minkowski"):
        return MetricSpec(kind, model=d.get("model", "su2"), action=d.get("action"), r=value)
    return MetricSpec(kind, t=value, model=d.get("model", "su2"), action=d.get("action"))
