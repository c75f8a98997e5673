"""The Sp(2) star diagram.

Sp(2) carries two commuting free SU(2) actions,

    bullet: (a c; b d) -> (a  c q*; b  d q*)
    star:   (a c; b d) -> (q a q*  q c; q b q*  q d),

with quotients M = Sp(2)/bullet = S^7 and M' = Sp(2)/star.  The bullet
quotient map is the first column (a, b); the star-invariant pair
(2 conj(c) d, |c|^2 - |d|^2) is an auxiliary invariant of the star orbit.
The ambient Euclidean metric on H^4 restricted to Sp(2) is bi-invariant
and G x G-invariant, and both quotients get their submersion metrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import least_squares, minimize

from . import models as M
from . import quaternion as Q
from .errors import BadGroupElement, QuadratureUnstable, ShootingFailed

N_QUAD = 256


# ---------------------------------------------------------------------------
# quaternionic matrices as complex matrices

def quat_to_complex(A) -> np.ndarray:
    """(..., n, n, 4) quaternion matrix -> (..., 2n, 2n) complex matrix."""
    A = np.asarray(A, dtype=float)
    z1 = A[..., 0] + 1j * A[..., 1]
    z2 = A[..., 2] + 1j * A[..., 3]
    n = A.shape[-2]
    out = np.zeros(A.shape[:-3] + (2 * n, 2 * n), dtype=complex)
    out[..., 0::2, 0::2] = z1
    out[..., 0::2, 1::2] = z2
    out[..., 1::2, 0::2] = -np.conj(z2)
    out[..., 1::2, 1::2] = np.conj(z1)
    return out


def complex_to_quat(C) -> np.ndarray:
    C = np.asarray(C)
    z1 = C[..., 0::2, 0::2]
    z2 = C[..., 0::2, 1::2]
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def _as_matrix(p) -> np.ndarray:
    x = p.coords if isinstance(p, M.ManifoldPoint) else np.asarray(p, dtype=float)
    return x.reshape(2, 2, 4)


def _diag(q1, q2) -> np.ndarray:
    D = np.zeros((2, 2, 4))
    D[0, 0] = q1
    D[1, 1] = q2
    return D


# ---------------------------------------------------------------------------
# projections

@dataclass(frozen=True)
class StarDiagram:
    bullet: str = "sp2-bullet"
    star: str = "sp2-star"

    def pi(self, p: M.ManifoldPoint) -> M.ManifoldPoint:
        return pi(p)

    def pi_prime(self, p: M.ManifoldPoint):
        return pi_prime(p)


def pi(p: M.ManifoldPoint) -> M.ManifoldPoint:
    """First column (a, b); constant along bullet orbits."""
    a, c, b, d = p.coords
    return M.ManifoldPoint("s7", np.concatenate([a, b]))


def d_pi(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    return np.concatenate([v[0:4], v[8:12]])


def pi_prime(p: M.ManifoldPoint):
    a, c, b, d = p.coords
    w = 2.0 * Q.qmul(Q.qconj(c), d)
    return Q.Quaternion.from_array(w), float(c @ c - d @ d)


def d_pi_prime(p: M.ManifoldPoint, v):
    a, c, b, d = p.coords
    va, vc, vb, vd = np.asarray(v, dtype=float).reshape(4, 4)
    dw = 2.0 * (Q.qmul(Q.qconj(vc), d) + Q.qmul(Q.qconj(c), vd))
    ds = 2.0 * (vc @ c - vd @ d)
    return dw, ds


# ---------------------------------------------------------------------------
# connection forms for the bullet circle

@dataclass(frozen=True, eq=False)
class ConnectionForm:
    """omega(x, v): coefficient of i for the bullet circle action."""
    evaluate: Callable
    averaged: bool = False

    def __call__(self, p, v) -> float:
        x = p.flat if isinstance(p, M.ManifoldPoint) else np.asarray(p, dtype=float)
        vv = v.flat if isinstance(v, M.TangentVector) else np.asarray(v, dtype=float)
        return float(self.evaluate(x, vv))


def _bullet_field(x) -> np.ndarray:
    return M.killing_array("sp2", "sp2-bullet", np.asarray(x, dtype=float).reshape(-1, 4)).reshape(-1)


def mechanical_connection() -> ConnectionForm:
    """omega_0(v) = <v, K> / |K|^2 with K the bullet field of i."""
    def ev(x, v):
        K = _bullet_field(x)
        return (v @ K) / (K @ K)
    return ConnectionForm(ev, averaged=False)


def skewed_connection(seed: int = 0, strength: float = 0.5) -> ConnectionForm:
    """A connection form that still reproduces i but is not circle-invariant."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(16)

    def ev(x, v):
        K = _bullet_field(x)
        w = M.project_array("sp2", x, e)
        w = w - (w @ K) / (K @ K) * K
        # the extra term kills K, so omega(K) = 1 still holds
        return (v @ K) / (K @ K) + strength * (v @ w) * (1.0 + x[5])
    return ConnectionForm(ev, averaged=False)


def _circle_act(theta, x) -> np.ndarray:
    q = Q.circle(theta)
    return M.get_action("sp2", "sp2-bullet").apply(q, np.asarray(x, dtype=float).reshape(4, 4)).reshape(-1)


def average_connection(omega0: ConnectionForm, n_quad: int = N_QUAD, check: bool = True) -> ConnectionForm:
    """omega_x(v) = mean over the circle of (omega_0)_{r x}(r v), trapezoid rule."""
    def make(n):
        thetas = 2 * math.pi * np.arange(n) / n

        def ev(x, v):
            return sum(omega0.evaluate(_circle_act(th, x), _circle_act(th, v)) for th in thetas) / n
        return ev

    ev = make(n_quad)
    if check:
        rng = np.random.default_rng(12345)
        p = M.random_point("sp2", rng)
        v = M.random_tangent(p, rng)
        ev2 = make(2 * n_quad)
        if abs(ev(p.flat, v.flat) - ev2(p.flat, v.flat)) > 1e-8:
            raise QuadratureUnstable("doubling the node count changed the average")
    return ConnectionForm(ev, averaged=True)


# ---------------------------------------------------------------------------
# Kaluza-Klein metric on Sp(2)

def _su2_connection(x) -> np.ndarray:
    """Bullet fields of i, j, k at x, shape (3, 16)."""
    return np.stack([
        M.get_action("sp2", "sp2-bullet").field_fn(U, np.asarray(x, dtype=float).reshape(4, 4)).reshape(-1)
        for U in Q.IMAG_BASIS
    ])


def kaluza_klein_eval(v: M.TangentVector, w: M.TangentVector, omega: Optional[ConnectionForm] = None,
                      r: Optional[float] = None) -> float:
    """g_M(d pi v, d pi w) + Q(omega v, omega w).

    g_M is the round metric on S^7.  The i-component of the connection comes
    from `omega` (default: mechanical); the j, k components are mechanical.
    With r given the i-component of the fiber term is scaled by -r^-2.
    """
    x = v.base.flat
    F = _su2_connection(x)
    cv = np.linalg.solve(F @ F.T, F @ v.flat)
    cw = np.linalg.solve(F @ F.T, F @ w.flat)
    if omega is not None:
        cv[0] = omega(x, v.flat)
        cw[0] = omega(x, w.flat)
    scale = np.array([1.0, 1.0, 1.0])
    if r is not None:
        scale[0] = -1.0 / r**2
    return float(d_pi(v.flat) @ d_pi(w.flat) + np.sum(scale * cv * cw))


def kaluza_klein_gram(X, V, r: Optional[float]) -> np.ndarray:
    """Batched Gram matrices of the Kaluza-Klein metric (mechanical connection)."""
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    out = np.empty(V.shape[:-1] + (V.shape[-2],))
    for b in range(X.shape[0]):
        F = _su2_connection(X[b])
        C = np.linalg.solve(F @ F.T, F @ V[b].T)  # (3, m)
        scale = np.array([1.0, 1.0, 1.0])
        if r is not None:
            scale[0] = -1.0 / r**2
        D = np.stack([d_pi(v) for v in V[b]])
        out[b] = D @ D.T + (C.T * scale) @ C
    return out


# ---------------------------------------------------------------------------
# horizontal spaces and quotient metrics

def action_fields(p: M.ManifoldPoint) -> np.ndarray:
    """Bullet and star fields at p, shape (6, 16)."""
    x = p.coords
    out = []
    for name in ("sp2-bullet", "sp2-star"):
        act = M.get_action("sp2", name)
        for U in Q.IMAG_BASIS:
            out.append(act.field_fn(U, x).reshape(-1))
    return np.array(out)


def juxt_horizontal(p: M.ManifoldPoint) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent vectors orthogonal to both orbits."""
    from scipy.linalg import null_space

    J = M.constraint_jacobian("sp2", p.flat)
    return null_space(np.vstack([J, action_fields(p)])).T


def bullet_horizontal(p: M.ManifoldPoint, v) -> np.ndarray:
    F = action_fields(p)[:3]
    v = np.asarray(v, dtype=float)
    return v - F.T @ np.linalg.solve(F @ F.T, F @ v)


def base_metric_norm2(p: M.ManifoldPoint, xi) -> float:
    """Squared norm of xi in T_{pi(p)} S^7 for the bullet-submersion metric.

    Computed as the minimum ambient norm over lifts of xi to T_p Sp(2).
    """
    T = M.tangent_basis("sp2", p)  # (10, 16)
    A = np.stack([d_pi(t) for t in T], axis=1)  # (8, 10)
    c = np.linalg.lstsq(A, np.asarray(xi, dtype=float), rcond=None)[0]
    return float(c @ c)


def quotient_norm2(p: M.ManifoldPoint, v) -> float:
    """Squared norm of d pi'(v) for the star-submersion metric."""
    h = M.star_horizontal_project(p.coords, np.asarray(v, dtype=float).reshape(4, 4)).reshape(-1)
    return float(h @ h)


def quotient_metric_eval(p: M.ManifoldPoint, v, w, t: float = 0.0) -> float:
    """Sigma metric on star-horizontal v, w, Cheeger-deformed along the induced circle."""
    from .cheeger import MetricSpec, gram

    q = M.ManifoldPoint("sigma", p.coords)
    hv = M.star_horizontal_project(p.coords, np.asarray(v, dtype=float).reshape(4, 4)).reshape(-1)
    hw = M.star_horizontal_project(p.coords, np.asarray(w, dtype=float).reshape(4, 4)).reshape(-1)
    if t == 0:
        return float(hv @ hw)
    spec = MetricSpec.cheeger("sigma", "sigma-bullet", t)
    return float(gram(spec, q, np.vstack([hv, hw]))[0, 1])


def induced_circle_action_sigma(q, p: M.ManifoldPoint) -> M.ManifoldPoint:
    q = q.as_array() if isinstance(q, Q.Quaternion) else np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > M.EPS_MEM:
        raise BadGroupElement("group element must be a unit quaternion")
    if abs(q[2]) > M.EPS_MEM or abs(q[3]) > M.EPS_MEM:
        raise BadGroupElement("circle element must lie in span{1, i}")
    return M.act("sigma", "sigma-bullet", q, M.ManifoldPoint("sigma", p.coords))


def star_orbit_distance(p1: M.ManifoldPoint, p2: M.ManifoldPoint, n_starts: int = 6) -> float:
    """min over q in SU(2) of |star(q) p1 - p2| (ambient)."""
    act = M.get_action("sp2", "sp2-star")
    rng = np.random.default_rng(0)

    def resid(th):
        return (act.apply(Q.qexp_arr(np.concatenate([[0.0], th])), p1.coords) - p2.coords).reshape(-1)

    best = math.inf
    for k in range(n_starts):
        x0 = np.zeros(3) if k == 0 else rng.uniform(-math.pi, math.pi, 3)
        res = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        best = min(best, float(np.linalg.norm(res.fun)))
    return best


# ---------------------------------------------------------------------------
# orbit-space distance comparison

@dataclass
class OrbitLengths:
    len_M: float
    len_M_prime: float
    sp2_length: float
    horizontality: float

    @property
    def residual(self) -> float:
        return abs(self.len_M - self.len_M_prime)


def _orbit_point(p2: np.ndarray, th: np.ndarray) -> np.ndarray:
    q = Q.qexp_arr(np.concatenate([[0.0], th[:3]]))
    r = Q.qexp_arr(np.concatenate([[0.0], th[3:]]))
    Dq = _diag(q, q)
    right = _diag(Q.qconj(q), Q.qconj(r))
    return Q.qmat_mul(Q.qmat_mul(Dq, p2), right)


def _dist2(p1c: np.ndarray, y: np.ndarray) -> float:
    U = p1c.conj().T @ quat_to_complex(y)
    ang = np.angle(np.linalg.eigvals(U))
    # ambient norm squared is half the complex Frobenius norm squared
    return 0.5 * float(np.sum(ang * ang))


def _horizontal_residual(p1: M.ManifoldPoint, v: np.ndarray) -> float:
    F = action_fields(p1)
    F = F / np.linalg.norm(F, axis=1, keepdims=True)
    n = np.linalg.norm(v)
    return float(np.max(np.abs(F @ v)) / n) if n > 0 else 0.0


def orbit_length_compare(p1: M.ManifoldPoint, p2: M.ManifoldPoint, n_starts: int = 8, tol: float = 1e-5,
                         n_nodes: int = 32, seed: int = 0) -> OrbitLengths:
    """Shortest Sp(2) geodesic from p1 to the G x G orbit of p2, and its two projected lengths."""
    P1 = _as_matrix(p1)
    P2 = _as_matrix(p2)
    p1c = quat_to_complex(P1)
    rng = np.random.default_rng(seed)
    best = None
    for k in range(n_starts):
        x0 = np.zeros(6) if k == 0 else rng.uniform(-math.pi, math.pi, 6)
        res = minimize(lambda th: _dist2(p1c, _orbit_point(P2, th)), x0, method="BFGS", options={"gtol": 1e-12})
        if best is None or res.fun < best.fun:
            best = res
    y = _orbit_point(P2, best.x)
    L = logm(p1c.conj().T @ quat_to_complex(y))
    xi = complex_to_quat(0.5 * (L - L.conj().T))  # (2, 2, 4), skew-Hermitian part
    v0 = Q.qmat_mul(P1, xi).reshape(-1)
    hres = _horizontal_residual(p1, v0)
    if hres > tol and np.linalg.norm(v0) > tol:
        raise ShootingFailed(f"geodesic is not orthogonal to the orbits (residual {hres:.2e})")
    xc = quat_to_complex(xi)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    s = 0.5 * (nodes + 1.0)
    wts = 0.5 * weights
    len_m = 0.0
    len_mp = 0.0
    for si, wi in zip(s, wts):
        gc = p1c @ expm(si * xc)
        g = complex_to_quat(gc)
        vel = Q.qmat_mul(g, xi).reshape(-1)
        pt = M.ManifoldPoint("sp2", M.retract_array("sp2", g.reshape(-1), check=False))
        len_m += wi * math.sqrt(base_metric_norm2(pt, d_pi(vel)))
        len_mp += wi * math.sqrt(quotient_norm2(pt, vel))
    return OrbitLengths(len_m, len_mp, float(np.linalg.norm(v0)), hres)


# ---------------------------------------------------------------------------
# coordinate-model cross-checks

def sigma_vertical_display(p: M.ManifoldPoint) -> np.ndarray:
    """2 i conj(c) d - 2 conj(c) d i."""
    a, c, b, d = p.coords
    u = Q.qmul(Q.qconj(c), d)
    return 2.0 * Q.qcomm(Q.E_I, u)


def sigma_horizontal_lemma_residual(p: M.ManifoldPoint, X) -> float:
    """| |u|^2 X - conj(u) X u | with u = conj(c) d."""
    a, c, b, d = p.coords
    u = Q.qmul(Q.qconj(c), d)
    X = np.asarray(X, dtype=float)
    return float(np.linalg.norm((u @ u) * X - Q.qmul(Q.qmul(Q.qconj(u), X), u)))
