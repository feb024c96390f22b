"""Quaternion and octonion arithmetic, SO(4) rotor pairs, Grassmannian maps
and Hopf fibrations.

Elements are plain numpy arrays whose last axis holds the components:
length 4 for quaternions in the basis (1, i, j, k), length 8 for octonions
in the basis (e0=1, e1, ..., e7).  Octonions are built by Cayley-Dickson
doubling of the quaternions with e4 = (0, 1) as the doubling unit:

    (a, b)(c, d) = (ac - conj(d) b, d a + b conj(c))

All functions broadcast over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])


class AlgebraError(ValueError):
    """Raised on invalid algebraic input (non-unit, non-orthogonal, ...)."""


def basis(dim: int, k: int) -> np.ndarray:
    e = np.zeros(dim)
    e[k] = 1.0
    return e


# --------------------------------------------------------------------------
# quaternions

def _arr(a):
    a = np.asarray(a)
    return a if a.dtype.kind in "fc" else a.astype(float)


def qmul(a, b):
    a, b = _arr(a), _arr(b)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def conj(a):
    a = _arr(a)
    out = -a
    out[..., 0] = a[..., 0]
    return out


def norm(a):
    return np.linalg.norm(a, axis=-1)


def normalize(a):
    a = np.asarray(a, dtype=float)
    return a / norm(a)[..., None]


def qexp_imag(v):
    """exp of a pure-imaginary quaternion given by its 3 imaginary parts."""
    v = np.asarray(v, dtype=float)
    t = np.linalg.norm(v, axis=-1)
    s = np.sinc(t / np.pi)  # sin(t)/t
    return np.concatenate([np.cos(t)[..., None], v * s[..., None]], axis=-1)


# --------------------------------------------------------------------------
# octonions

def omul(a, b):
    a, b = _arr(a), _arr(b)
    a1, a2 = a[..., :4], a[..., 4:]
    b1, b2 = b[..., :4], b[..., 4:]
    return np.concatenate([
        qmul(a1, b1) - qmul(conj(b2), a2),
        qmul(b2, a1) + qmul(a2, conj(b1)),
    ], axis=-1)


def amul(a, b):
    """Multiply in whichever algebra the last-axis length selects."""
    n = np.shape(a)[-1]
    if n != np.shape(b)[-1]:
        raise AlgebraError(f"mixed-algebra operands (dims {n} and {np.shape(b)[-1]})")
    if n == 4:
        return qmul(a, b)
    if n == 8:
        return omul(a, b)
    raise AlgebraError(f"unsupported algebra dimension {n}")


def associator(a, b, c):
    return amul(amul(a, b), c) - amul(a, amul(b, c))


@dataclass(frozen=True)
class Quaternion:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @property
    def array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        return cls(*map(float, a))

    def __mul__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return Quaternion.from_array(qmul(self.array, other.array))

    def conj(self) -> "Quaternion":
        return Quaternion.from_array(conj(self.array))

    def norm(self) -> float:
        return float(norm(self.array))


@dataclass(frozen=True)
class Octonion:
    c: tuple = (1.0, 0, 0, 0, 0, 0, 0, 0)

    def __post_init__(self):
        if len(self.c) != 8:
            raise AlgebraError("an octonion has 8 components")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.c, dtype=float)

    @classmethod
    def from_array(cls, a) -> "Octonion":
        return cls(tuple(map(float, a)))

    def __mul__(self, other):
        if not isinstance(other, Octonion):
            return NotImplemented
        return Octonion.from_array(omul(self.array, other.array))

    def conj(self) -> "Octonion":
        return Octonion.from_array(conj(self.array))

    def norm(self) -> float:
        return float(norm(self.array))


def mul(a, b):
    """Product of two algebra elements of the same kind.

    Accepts Quaternion/Octonion objects or raw arrays; mixing a quaternion
    with an octonion raises AlgebraError.
    """
    if isinstance(a, (Quaternion, Octonion)) or isinstance(b, (Quaternion, Octonion)):
        if type(a) is not type(b):
            raise AlgebraError(f"mixed-algebra operands {type(a).__name__} * {type(b).__name__}")
        return a * b
    return amul(a, b)


# --------------------------------------------------------------------------
# multiplication operators as matrices

def left_matrix(a):
    """Matrix of z -> a z (columns are a * e_k)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    cols = [amul(a, np.broadcast_to(basis(n, k), a.shape)) for k in range(n)]
    return np.stack(cols, axis=-1)


def right_matrix(a):
    """Matrix of z -> z a."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    cols = [amul(np.broadcast_to(basis(n, k), a.shape), a) for k in range(n)]
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class AlgebraContext:
    """Ambient algebra (4 or 8) and the distinguished imaginary unit u."""

    dim: int = 4
    u: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim not in (4, 8):
            raise AlgebraError(f"ambient dimension must be 4 or 8, got {self.dim}")
        u = self.u
        if u is None:
            u = J.copy() if self.dim == 4 else basis(8, 1)
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise AlgebraError(f"u must have {self.dim} components")
        if abs(u[0]) > 1e-12 or abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise AlgebraError("u must be a unit imaginary element")
        object.__setattr__(self, "u", u)

    @property
    def J(self) -> np.ndarray:
        """Complex structure: left multiplication by i."""
        return left_matrix(basis(self.dim, 1))


# --------------------------------------------------------------------------
# SO(4) as pairs of unit quaternions

def _check_unit(a, what, tol=1e-10):
    if np.any(np.abs(norm(a) - 1.0) > tol):
        raise AlgebraError(f"{what} must be a unit element")


def rotor_pair_to_matrix(p, q):
    """4x4 matrix of z -> p z conj(q)."""
    _check_unit(p, "p")
    _check_unit(q, "q")
    return left_matrix(p) @ right_matrix(conj(q))


def canonical_sign(p, tol=1e-12):
    """Flip p so that its first component of magnitude > tol is positive."""
    p = np.array(p, dtype=float)
    flat = p.reshape(-1, p.shape[-1])
    for row in flat:
        for c in row:
            if abs(c) > tol:
                if c < 0:
                    row *= -1
                break
    return flat.reshape(p.shape)


def matrix_to_rotor_pair(m, tol=1e-10):
    """Inverse of rotor_pair_to_matrix, returning the canonical representative.

    The pair is unique up to an overall sign; p is normalised so its first
    nonzero component is positive and q follows.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise AlgebraError("expected a 4x4 matrix")
    if np.linalg.norm(m.T @ m - np.eye(4)) > tol:
        raise AlgebraError("matrix is not orthogonal")
    if np.linalg.det(m) < 0:
        raise AlgebraError("determinant -1: no rotor pair exists")
    m1 = m[:, 0]  # image of 1 = p conj(q)
    # image of e_a times conj(image of 1) = p e_a conj(p): the SO(3) part of Ad_p
    ad = np.stack([qmul(m[:, a], conj(m1))[1:] for a in (1, 2, 3)], axis=-1)
    x, y, z, w = Rotation.from_matrix(ad).as_quat()
    p = canonical_sign(np.array([w, x, y, z]))
    q = qmul(conj(m1), p)  # conj(q) = conj(p) m1
    return p, q


# --------------------------------------------------------------------------
# Stiefel / Grassmannian maps

def stiefel_rho_sigma(e1, e2, tol=1e-8):
    """(rho, sigma) = (e2 conj(e1), conj(e1) e2) for an orthonormal pair.

    For octonions only rho is defined; sigma is returned as None.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if (np.any(np.abs(norm(e1) - 1) > tol) or np.any(np.abs(norm(e2) - 1) > tol)
            or np.any(np.abs(np.sum(e1 * e2, axis=-1)) > tol)):
        raise AlgebraError("input frame is not orthonormal")
    rho = amul(e2, conj(e1))
    sigma = amul(conj(e1), e2) if e1.shape[-1] == 4 else None
    return rho, sigma


def plane_from_rho_sigma(rho, sigma, tol=1e-8):
    """Oriented orthonormal pair spanning the plane with Gauss components (rho, sigma).

    The plane is the kernel of z -> rho z - z sigma.
    """
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    for v, name in ((rho, "rho"), (sigma, "sigma")):
        if abs(v[0]) > tol or abs(np.linalg.norm(v) - 1) > tol:
            raise AlgebraError(f"{name} must be a unit imaginary quaternion")
    op = left_matrix(rho) - right_matrix(sigma)
    _, s, vt = np.linalg.svd(op)
    if s[1] < 1e-6 or s[2] > 1e-6:
        raise AlgebraError(f"kernel dimension is not 2 (singular values {s})")
    e1 = vt[-1] / np.linalg.norm(vt[-1])
    e2 = qmul(rho, e1)  # rho = e2 conj(e1)
    return e1, e2


# --------------------------------------------------------------------------
# Hopf fibrations

def hopf_left(p, u=J):
    """p u conj(p)."""
    _check_unit(p, "p")
    return qmul(qmul(p, u), conj(p))


def rotor_to(u, rho, axis_hint=None, tol=1e-9):
    """Unit quaternion p with p u conj(p) = rho, by minimal rotation.

    The minimal rotor is normalize(1 - rho u).  When rho is (numerically)
    antipodal to u a unit imaginary ``axis_hint`` orthogonal to u must be
    supplied; the half-turn about it is returned.
    """
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    raw = np.broadcast_to(ONE, rho.shape) - qmul(rho, u)
    n = norm(raw)
    bad = n < tol
    if np.any(bad):
        if axis_hint is None:
            raise AlgebraError("rho is antipodal to u; supply axis_hint (a unit imaginary orthogonal to u)")
        hint = np.asarray(axis_hint, dtype=float)
        if abs(np.dot(hint, u)) > 1e-8:
            raise AlgebraError("axis_hint must be orthogonal to u")
        raw = np.where(bad[..., None], np.broadcast_to(normalize(hint), raw.shape), raw)
        n = norm(raw)
    return raw / n[..., None]


# --------------------------------------------------------------------------
# Spin(7) acting on the octonions

@dataclass(frozen=True)
class Spin7Element:
    """8x8 orthogonal matrix built as a product of left multiplications L_v."""

    m: np.ndarray
    factors: tuple = ()

    @classmethod
    def from_generators(cls, vs) -> "Spin7Element":
        m = np.eye(8)
        vs = [np.asarray(v, dtype=float) for v in vs]
        for v in vs:
            if abs(v[0]) > 1e-12 or abs(np.linalg.norm(v) - 1) > 1e-12:
                raise AlgebraError("Spin7 generators must be unit imaginary octonions")
            m = m @ left_matrix(v)
        return cls(m, tuple(tuple(v) for v in vs))

    @classmethod
    def identity(cls) -> "Spin7Element":
        return cls(np.eye(8), ())

    def __matmul__(self, other: "Spin7Element") -> "Spin7Element":
        return Spin7Element(self.m @ other.m, self.factors + other.factors)


def random_unit_imaginary(rng, dim=8, size=None):
    shape = (dim - 1,) if size is None else (size, dim - 1)
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def spin7_hopf(p, u=None, tol=1e-10, return_residual=False):
    """The unit imaginary w with p L_u p^-1 = L_w.

    w is read off by applying the conjugated matrix to 1; the full matrix
    identity is then checked.
    """
    m = p.m if isinstance(p, Spin7Element) else np.asarray(p, dtype=float)
    u = basis(8, 1) if u is None else np.asarray(u, dtype=float)
    if np.linalg.norm(m.T @ m - np.eye(8)) > 1e-8:
        raise AlgebraError("element is not orthogonal")
    conj_lu = m @ left_matrix(u) @ m.T
    w = conj_lu[:, 0]
    resid = float(np.max(np.abs(conj_lu - left_matrix(w))))
    if resid > tol:
        raise AlgebraError(f"p L_u p^-1 is not a left multiplication (residual {resid:.3g}); p is not in Spin7")
    return (w, resid) if return_residual else w


def spin7_reach(e1, e2, rng=None, n_generators=4, starts=10, tol=1e-10):
    """Search for p in Spin7, a product of n_generators left multiplications
    by unit imaginary octonions, with p(1) = e1 and p(e_1) = e2.

    Least squares from random starts; returns (p, residual) for the best
    start, raising AlgebraError when no start gets below tol.
    """
    from scipy.optimize import least_squares

    e1, e2 = (np.asarray(v, dtype=float) for v in (e1, e2))
    gram = np.array([[e1 @ e1, e1 @ e2], [e2 @ e1, e2 @ e2]])
    if np.abs(gram - np.eye(2)).max() > 1e-8:
        raise AlgebraError("(e1, e2) is not orthonormal")
    rng = np.random.default_rng(0) if rng is None else rng

    def generators(params):
        vs = params.reshape(n_generators, 7)
        vs = vs / np.linalg.norm(vs, axis=-1, keepdims=True)
        return np.concatenate([np.zeros((n_generators, 1)), vs], axis=-1)

    def product(params):
        return Spin7Element.from_generators(generators(params))

    start = np.stack([basis(8, 0), basis(8, 1)], axis=-1)
    table = left_matrix(np.eye(8))  # L_v is linear in v

    def resid(params):
        cols = start
        for L in np.einsum("gk,kij->gij", generators(params), table)[::-1]:
            cols = L @ cols
        return (cols - np.stack([e1, e2], axis=-1)).ravel()

    best = None
    for _ in range(starts):
        sol = least_squares(resid, rng.standard_normal(7 * n_generators), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = float(np.abs(sol.fun).max())
        if best is None or r < best[1]:
            best = (product(sol.x), r)
        if r < tol:
            break
    if best[1] > tol:
        raise AlgebraError(f"no Spin7 product found (residual {best[1]:.3g})")
    return best
