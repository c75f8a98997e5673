"""Manifold models as constraint sets in quaternionic ambient spaces.

Points are stored as arrays of shape (k, 4): one row per quaternion.  The
ambient space is R^(4k) with the Euclidean inner product, and every action
below acts by ambient isometries.

    minkowski   H                   (k=1, no constraint)
    su2         unit quaternions    (k=1)
    s7          unit sphere of H^2  (k=2)
    sp2         rows (a c; b d)     (k=4, stored as a, c, b, d)
    sigma       sp2 representatives of star-orbits; tangent vectors are the
                star-horizontal ones
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import null_space

from . import quaternion as Q
from .errors import BadGroupElement, BadParameter, DegenerateMetric, DegenerateRow, NotNearManifold

EPS_MEM = 1e-9
EPS_FIX = 1e-6
H_ACT = 1e-5

N_QUAT = {"minkowski": 1, "su2": 1, "s7": 2, "sp2": 4, "sigma": 4}
DIM = {"minkowski": 4, "su2": 3, "s7": 7, "sp2": 10, "sigma": 7}


def _check_model(model: str) -> None:
    if model not in N_QUAT:
        raise BadParameter(f"unknown model {model!r}")


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    model: str
    coords: np.ndarray

    def __post_init__(self):
        _check_model(self.model)
        c = np.array(self.coords, dtype=float).reshape(N_QUAT[self.model], 4)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def flat(self) -> np.ndarray:
        return self.coords.reshape(-1)

    def membership_residual(self) -> float:
        return float(np.max(np.abs(constraints(self.model, self.flat)), initial=0.0))

    def is_member(self, tol: float = EPS_MEM) -> bool:
        return self.membership_residual() <= tol


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: ManifoldPoint
    ambient: np.ndarray
    fiber_t: Optional[float] = None

    def __post_init__(self):
        a = np.array(self.ambient, dtype=float).reshape(N_QUAT[self.base.model], 4)
        a.setflags(write=False)
        object.__setattr__(self, "ambient", a)

    @property
    def flat(self) -> np.ndarray:
        return self.ambient.reshape(-1)

    def tangency_residual(self) -> float:
        J = constraint_jacobian(self.base.model, self.base.flat)
        if J.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(J @ self.flat)))


class CausalClass(enum.Enum):
    TimeLike = "TimeLike"
    LightLike = "LightLike"
    SpaceLike = "SpaceLike"
    Zero = "Zero"


def point(model: str, coords) -> ManifoldPoint:
    return ManifoldPoint(model, np.asarray(coords, dtype=float))


def vector(p: ManifoldPoint, ambient, fiber_t: Optional[float] = None) -> TangentVector:
    return TangentVector(p, np.asarray(ambient, dtype=float), fiber_t)


# ---------------------------------------------------------------------------
# constraints

def constraints(model: str, x) -> np.ndarray:
    """Constraint values (zero on the manifold); works on batches (..., N)."""
    x = np.asarray(x, dtype=float)
    if model == "minkowski":
        return np.zeros(x.shape[:-1] + (0,))
    if model in ("su2", "s7"):
        return (np.sum(x * x, axis=-1) - 1.0)[..., None]
    q = x.reshape(x.shape[:-1] + (4, 4))
    a, c, b, d = q[..., 0, :], q[..., 1, :], q[..., 2, :], q[..., 3, :]
    r1 = np.sum(a * a, -1) + np.sum(c * c, -1) - 1.0
    r2 = np.sum(b * b, -1) + np.sum(d * d, -1) - 1.0
    off = Q.qmul(a, Q.qconj(b)) + Q.qmul(c, Q.qconj(d))
    return np.concatenate([r1[..., None], r2[..., None], off], axis=-1)


def constraint_jacobian(model: str, x) -> np.ndarray:
    """Jacobian (m, N) of `constraints` at a single point."""
    x = np.asarray(x, dtype=float)
    if model == "minkowski":
        return np.zeros((0, 4))
    if model in ("su2", "s7"):
        return 2.0 * x[None, :]
    a, c, b, d = x.reshape(4, 4)
    J = np.zeros((6, 16))
    J[0, 0:4] = 2 * a
    J[0, 4:8] = 2 * c
    J[1, 8:12] = 2 * b
    J[1, 12:16] = 2 * d
    eye = np.eye(4)
    # d(a conj(b) + c conj(d)) is linear in each block
    J[2:, 0:4] = Q.qmul(eye, Q.qconj(b)).T
    J[2:, 4:8] = Q.qmul(eye, Q.qconj(d)).T
    J[2:, 8:12] = Q.qmul(a, Q.qconj(eye)).T
    J[2:, 12:16] = Q.qmul(c, Q.qconj(eye)).T
    return J


def constraint_hessian_form(model: str, v) -> np.ndarray:
    """Second derivative of the constraints along v, i.e. v^T H_j v for each j.

    Every constraint here is quadratic, so this is exact.
    """
    v = np.asarray(v, dtype=float)
    if model == "minkowski":
        return np.zeros(v.shape[:-1] + (0,))
    if model in ("su2", "s7"):
        return (2.0 * np.sum(v * v, axis=-1))[..., None]
    q = v.reshape(v.shape[:-1] + (4, 4))
    a, c, b, d = q[..., 0, :], q[..., 1, :], q[..., 2, :], q[..., 3, :]
    r1 = 2 * (np.sum(a * a, -1) + np.sum(c * c, -1))
    r2 = 2 * (np.sum(b * b, -1) + np.sum(d * d, -1))
    off = 2 * (Q.qmul(a, Q.qconj(b)) + Q.qmul(c, Q.qconj(d)))
    return np.concatenate([r1[..., None], r2[..., None], off], axis=-1)


# ---------------------------------------------------------------------------
# retraction

def _rows_gram_schmidt(x: np.ndarray) -> np.ndarray:
    """Right-module quaternionic Gram-Schmidt on the rows (a, c), (b, d)."""
    q = np.array(x, dtype=float).reshape(x.shape[:-1] + (4, 4))
    a, c, b, d = q[..., 0, :], q[..., 1, :], q[..., 2, :], q[..., 3, :]
    n1 = np.sqrt(np.sum(a * a, -1) + np.sum(c * c, -1))
    if np.any(n1 < 1e-8):
        raise DegenerateRow("first row has norm below 1e-8")
    a = a / n1[..., None]
    c = c / n1[..., None]
    # full quaternion-valued projection coefficient
    lam = Q.qmul(b, Q.qconj(a)) + Q.qmul(d, Q.qconj(c))
    b = b - Q.qmul(lam, a)
    d = d - Q.qmul(lam, c)
    n2 = np.sqrt(np.sum(b * b, -1) + np.sum(d * d, -1))
    if np.any(n2 < 1e-8):
        raise DegenerateRow("second row has norm below 1e-8")
    b = b / n2[..., None]
    d = d / n2[..., None]
    return np.stack([a, c, b, d], axis=-2).reshape(x.shape)


def retract_array(model: str, x, check: bool = True) -> np.ndarray:
    """Nearest-ish point on the model; batched over leading axes."""
    x = np.asarray(x, dtype=float)
    if model == "minkowski":
        out = x.copy()
    elif model in ("su2", "s7"):
        n = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(n < 1e-8):
            raise DegenerateRow("cannot normalise a zero vector")
        out = x / n
    else:
        out = _rows_gram_schmidt(x)
    if check and np.any(np.linalg.norm(out - x, axis=-1) > 0.1):
        raise NotNearManifold("input is farther than 0.1 from the constraint set")
    return out


def retract(model: str, ambient) -> ManifoldPoint:
    _check_model(model)
    x = np.asarray(ambient, dtype=float).reshape(-1)
    return ManifoldPoint(model, retract_array(model, x))


# ---------------------------------------------------------------------------
# actions

def _conj_each(q, x):
    return Q.qconjugate_by(q[..., None, :], x)


def _apply_su2_conj(q, x):
    return _conj_each(q, x)


def _apply_hopf(q, x):
    return Q.qmul(q[..., None, :], x)


def _apply_bullet(q, x):
    qb = Q.qconj(q)
    out = np.array(x, dtype=float)
    out[..., 1, :] = Q.qmul(x[..., 1, :], qb)
    out[..., 3, :] = Q.qmul(x[..., 3, :], qb)
    return out


def _apply_star(q, x):
    out = np.empty_like(np.asarray(x, dtype=float))
    out[..., 0, :] = Q.qconjugate_by(q, x[..., 0, :])
    out[..., 1, :] = Q.qmul(q, x[..., 1, :])
    out[..., 2, :] = Q.qconjugate_by(q, x[..., 2, :])
    out[..., 3, :] = Q.qmul(q, x[..., 3, :])
    return out


def _apply_translation(q, x):
    theta = np.arctan2(q[..., 1], q[..., 0])
    out = np.array(x, dtype=float)
    out[..., 0, 0] = out[..., 0, 0] + theta
    return out


def _field_comm(U, x):
    return Q.qcomm(U, x)


def _field_hopf(U, x):
    return Q.qmul(U, x)


def _field_bullet(U, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    out[..., 1, :] = -Q.qmul(x[..., 1, :], U)
    out[..., 3, :] = -Q.qmul(x[..., 3, :], U)
    return out


def _field_star(U, x):
    out = np.empty_like(np.asarray(x, dtype=float))
    out[..., 0, :] = Q.qcomm(U, x[..., 0, :])
    out[..., 1, :] = Q.qmul(U, x[..., 1, :])
    out[..., 2, :] = Q.qcomm(U, x[..., 2, :])
    out[..., 3, :] = Q.qmul(U, x[..., 3, :])
    return out


def _field_translation(U, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    out[..., 0, 0] = np.asarray(U)[..., 1]
    return out


@dataclass(frozen=True)
class Action:
    name: str
    models: tuple
    group: str  # "S1" or "SU2"
    apply: Callable = field(repr=False)
    field_fn: Callable = field(repr=False)

    @property
    def algebra(self):
        return (Q.E_I,) if self.group == "S1" else Q.IMAG_BASIS


ACTIONS = {
    a.name: a
    for a in (
        Action("su2-conj", ("su2",), "S1", _apply_su2_conj, _field_comm),
        Action("hopf", ("su2", "s7"), "S1", _apply_hopf, _field_hopf),
        Action("s7-star", ("s7",), "S1", _apply_su2_conj, _field_comm),
        Action("sp2-bullet", ("sp2",), "SU2", _apply_bullet, _field_bullet),
        Action("sp2-star", ("sp2",), "SU2", _apply_star, _field_star),
        Action("sigma-bullet", ("sigma",), "S1", _apply_bullet, _field_bullet),
        Action("translation", ("minkowski",), "S1", _apply_translation, _field_translation),
    )
}


def get_action(model: str, action: str) -> Action:
    try:
        act_ = ACTIONS[action]
    except KeyError:
        raise BadParameter(f"unknown action {action!r}") from None
    if model not in act_.models:
        raise BadParameter(f"action {action!r} does not act on model {model!r}")
    return act_


def act(model: str, action: str, q, p: ManifoldPoint) -> ManifoldPoint:
    a = get_action(model, action)
    q = q.as_array() if isinstance(q, Q.Quaternion) else np.asarray(q, dtype=float)
    if abs(np.linalg.norm(q) - 1.0) > EPS_MEM:
        raise BadGroupElement("group element must be a unit quaternion")
    return ManifoldPoint(model, a.apply(q, p.coords))


def killing_array(model: str, action: str, x, U=Q.E_I) -> np.ndarray:
    """Analytic action field of U at coords x (..., k, 4).

    For the sigma model the bullet field is projected onto the
    star-horizontal space, which is how the induced circle action on the
    quotient is represented.
    """
    a = get_action(model, action)
    f = a.field_fn(np.asarray(U, dtype=float), np.asarray(x, dtype=float))
    if model == "sigma":
        f = star_horizontal_project(x, f)
    return f


def action_field(model: str, action: str, U, p: ManifoldPoint) -> TangentVector:
    """Central difference of s -> act(qexp(sU), p) at s = 0."""
    a = get_action(model, action)
    U = U.as_array() if isinstance(U, Q.Quaternion) else np.asarray(U, dtype=float)
    h = H_ACT
    plus = a.apply(Q.qexp_arr(h * U), p.coords)
    minus = a.apply(Q.qexp_arr(-h * U), p.coords)
    f = (plus - minus) / (2 * h)
    if model == "sigma":
        f = star_horizontal_project(p.coords, f)
    return TangentVector(p, f)


# ---------------------------------------------------------------------------
# tangent spaces

def star_fields(x) -> np.ndarray:
    """Star action fields for i, j, k at coords x; shape (..., 3, 16)."""
    x = np.asarray(x, dtype=float)
    fs = [_field_star(U, x).reshape(x.shape[:-2] + (16,)) for U in Q.IMAG_BASIS]
    return np.stack(fs, axis=-2)


def star_horizontal_project(x, v) -> np.ndarray:
    """Remove the star-vertical component of v (ambient projection)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = v.shape
    F = star_fields(x)  # (..., 3, 16)
    vf = v.reshape(shape[:-2] + (16,)) if v.shape[-1] == 4 else v
    G = F @ np.swapaxes(F, -1, -2)
    rhs = F @ vf[..., None]
    coef = np.linalg.solve(G, rhs)
    out = vf - (np.swapaxes(F, -1, -2) @ coef)[..., 0]
    return out.reshape(shape)


def tangent_basis(model: str, p) -> np.ndarray:
    """Ambient-orthonormal basis of T_p (rows), shape (dim, N)."""
    x = p.flat if isinstance(p, ManifoldPoint) else np.asarray(p, dtype=float).reshape(-1)
    if model == "minkowski":
        return np.eye(4)
    J = constraint_jacobian("sp2" if model == "sigma" else model, x)
    if model == "sigma":
        J = np.vstack([J, star_fields(x.reshape(4, 4))])
    B = null_space(J)
    return B.T


def project_array(model: str, x, v) -> np.ndarray:
    """Orthogonal projection onto the tangent space; batched over leading axes."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if model == "minkowski":
        return v.copy()
    if model in ("su2", "s7"):
        return v - np.sum(v * x, -1, keepdims=True) * x
    lead = x.shape[:-1]
    xs = x.reshape((-1, x.shape[-1]))
    vs = v.reshape((-1, v.shape[-1]))
    out = np.empty_like(vs)
    for i in range(xs.shape[0]):
        J = constraint_jacobian("sp2", xs[i])
        if model == "sigma":
            J = np.vstack([J, star_fields(xs[i].reshape(4, 4))])
        coef = np.linalg.lstsq(J @ J.T, J @ vs[i], rcond=None)[0]
        out[i] = vs[i] - J.T @ coef
    return out.reshape(lead + (v.shape[-1],))


def project_tangent(p: ManifoldPoint, v) -> TangentVector:
    v = v.flat if isinstance(v, TangentVector) else np.asarray(v, dtype=float).reshape(-1)
    return TangentVector(p, project_array(p.model, p.flat, v))


def vertical_space(model: str, action: str, p: ManifoldPoint) -> list:
    """Spanning set of the orbit tangent space at p (empty at fixed points)."""
    a = get_action(model, action)
    out = []
    basis = []
    for U in a.algebra:
        f = killing_array(model, action, p.coords, U).reshape(-1)
        r = f.copy()
        for b in basis:
            r -= np.dot(r, b) * b
        nr = np.linalg.norm(r)
        if nr > EPS_FIX:
            basis.append(r / nr)
            out.append(TangentVector(p, f))
    return out


def horizontal_space(model: str, action: str, p: ManifoldPoint, metric=None) -> list:
    """Basis of the metric-orthogonal complement of the vertical space."""
    from .cheeger import MetricSpec, gram

    spec = metric if metric is not None else MetricSpec("Ambient", model=model, action=action)
    T = tangent_basis(model, p)
    G = gram(spec, p, T)
    if abs(np.linalg.det(G)) < 1e-12:
        raise DegenerateMetric("tangent Gram matrix is singular")
    V = [v.flat for v in vertical_space(model, action, p)]
    if not V:
        return [TangentVector(p, t) for t in T]
    cross = gram(spec, p, np.vstack([T, np.array(V)]))[: T.shape[0], T.shape[0]:]
    C = null_space(cross.T)
    H = C.T @ T
    return [TangentVector(p, h) for h in H]


# ---------------------------------------------------------------------------
# isotropy

@dataclass(frozen=True)
class Isotropy:
    kind: str  # Trivial, Z2, FullCircle, Other
    angles: tuple


def isotropy_scan(model: str, action: str, p: ManifoldPoint, n_grid: int = 360) -> Isotropy:
    if n_grid < 360:
        raise BadParameter("n_grid must be at least 360")
    a = get_action(model, action)
    theta = 2 * np.pi * np.arange(n_grid) / n_grid
    moved = a.apply(Q.circle(theta), np.broadcast_to(p.coords, (n_grid,) + p.coords.shape))
    disp = np.linalg.norm((moved - p.coords).reshape(n_grid, -1), axis=1)
    hits = np.nonzero(disp < EPS_FIX)[0]
    angles = tuple(float(theta[k]) for k in hits)
    if len(hits) == n_grid:
        kind = "FullCircle"
    elif list(hits) == [0]:
        kind = "Trivial"
    elif n_grid % 2 == 0 and list(hits) == [0, n_grid // 2]:
        kind = "Z2"
    else:
        kind = "Other"
    return Isotropy(kind, angles)


def is_fixed(model: str, action: str, p: ManifoldPoint) -> bool:
    return not vertical_space(model, action, p)


# ---------------------------------------------------------------------------
# Minkowski

def minkowski_c2(r: float) -> float:
    if r <= 1:
        raise BadParameter("r must exceed 1")
    return (r * r - 1.0) / r**4


def minkowski_metric(v: TangentVector, w: TangentVector, r: float) -> float:
    c2 = minkowski_c2(r)
    a, b = v.flat, w.flat
    return float(-a[0] * b[0] * c2 + np.dot(a[1:4], b[1:4]))


# ---------------------------------------------------------------------------
# sampling

def random_coords(model: str, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    shape = (() if n is None else (n,)) + (4 * N_QUAT[model],)
    g = rng.standard_normal(shape)
    if model == "minkowski":
        return g
    if model in ("su2", "s7"):
        return g / np.linalg.norm(g, axis=-1, keepdims=True)
    return _rows_gram_schmidt(g)


def random_point(model: str, rng: np.random.Generator) -> ManifoldPoint:
    return ManifoldPoint(model, random_coords(model, rng))


def random_tangent(p: ManifoldPoint, rng: np.random.Generator) -> TangentVector:
    return project_tangent(p, rng.standard_normal(p.flat.shape))


def random_principal_point(model: str, action: str, rng: np.random.Generator) -> ManifoldPoint:
    while True:
        p = random_point(model, rng)
        if vertical_space(model, action, p):
            return p
