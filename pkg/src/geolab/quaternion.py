"""Quaternion arithmetic.

Two layers live here.  `Quaternion` is an immutable value type used by the
public API and by the exact identity tests (its components may be floats or
`fractions.Fraction`).  The `q*` array helpers operate on numpy arrays whose
last axis has length 4 and are what the geometry code uses internally.

Component order is always (w, x, y, z) for w + x i + y j + z k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np


@dataclass(frozen=True)
class Quaternion:
    w: Real = 0.0
    x: Real = 0.0
    y: Real = 0.0
    z: Real = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)

    @classmethod
    def exact(cls, w=0, x=0, y=0, z=0) -> "Quaternion":
        """Build a quaternion with rational components (exact mode)."""
        return cls(Fraction(w), Fraction(x), Fraction(y), Fraction(z))

    def as_tuple(self):
        return (self.w, self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.as_tuple()])

    @property
    def real(self):
        return self.w

    @property
    def imag(self) -> "Quaternion":
        return Quaternion(0 * self.w, self.x, self.y, self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self):
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(float(self.norm2()))

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)

    def __rmul__(self, s):
        return Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def isclose(self, other: "Quaternion", tol: float = 1e-12) -> bool:
        return (self - other).norm() <= tol


ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product p*q."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def conj(q: Quaternion) -> Quaternion:
    return q.conj()


def norm(q: Quaternion) -> float:
    return q.norm()


def inner(p: Quaternion, q: Quaternion):
    """Re(p * conj(q)), the Euclidean inner product on R^4."""
    return mul(p, q.conj()).w


def qexp(q: Quaternion) -> Quaternion:
    a = float(q.w)
    v = (float(q.x), float(q.y), float(q.z))
    theta = math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)
    ea = math.exp(a)
    if theta == 0.0:
        return Quaternion(ea, 0.0, 0.0, 0.0)
    s = ea * math.sin(theta) / theta
    return Quaternion(ea * math.cos(theta), s * v[0], s * v[1], s * v[2])


def commutator(V: Quaternion, a: Quaternion) -> Quaternion:
    """V a - a V."""
    return mul(V, a) - mul(a, V)


def conj_op(a: Quaternion, X: Quaternion) -> Quaternion:
    """conj(a) X a."""
    return mul(mul(a.conj(), X), a)


# ---------------------------------------------------------------------------
# array layer: shape (..., 4)

_CONJ = np.array([1.0, -1.0, -1.0, -1.0])

E_ONE = np.array([1.0, 0.0, 0.0, 0.0])
E_I = np.array([0.0, 1.0, 0.0, 0.0])
E_J = np.array([0.0, 0.0, 1.0, 0.0])
E_K = np.array([0.0, 0.0, 0.0, 1.0])
IMAG_BASIS = (E_I, E_J, E_K)


def qmul(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(q):
    return np.asarray(q, dtype=float) * _CONJ


def qinner(p, q):
    return np.sum(np.asarray(p, dtype=float) * np.asarray(q, dtype=float), axis=-1)


def qnorm(q):
    return np.sqrt(qinner(q, q))


def qcomm(V, a):
    return qmul(V, a) - qmul(a, V)


def qconjugate_by(q, a):
    """q a conj(q)."""
    return qmul(qmul(q, a), qconj(q))


def qexp_arr(q):
    q = np.asarray(q, dtype=float)
    v = q[..., 1:]
    theta = np.sqrt(np.sum(v * v, axis=-1))
    ea = np.exp(q[..., 0])
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(theta > 0, np.sin(theta) / np.where(theta > 0, theta, 1.0), 1.0)
    out = np.empty_like(q)
    out[..., 0] = ea * np.cos(theta)
    out[..., 1:] = (ea * sinc)[..., None] * v
    return out


def circle(theta):
    """e^{i theta} as an array."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (4,))
    out[..., 0] = np.cos(theta)
    out[..., 1] = np.sin(theta)
    return out


# 2x2 quaternionic matrices stored row-major as (..., 2, 2, 4)

def qmat_mul(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return qmul(A[..., :, :, None, :], B[..., None, :, :, :]).sum(axis=-3)


def qmat_adj(A):
    """Conjugate transpose."""
    return qconj(np.swapaxes(np.asarray(A, dtype=float), -2, -3))
