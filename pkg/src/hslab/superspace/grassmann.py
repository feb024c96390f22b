"""Grassmann algebra with field-valued coefficients.

Odd generators, in order: theta, thetabar, eta_1 .. eta_N.  The real odd
coordinates are recovered as theta^1 = (theta + thetabar)/2 and
theta^2 = (theta - thetabar)/(2i), i.e. theta = theta^1 + i theta^2.

An element stores {bitmask: coefficient array}; each array has the
backend's point axes first, then the value axes (vector, matrix, ...).
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from ..gridcalc import GridDomain, d_dz, d_dzbar, sup_norm

THETA, THETABAR = 0, 1
ETA0 = 2


class GrassmannError(ValueError):
    pass


@lru_cache(maxsize=None)
def merge_sign(m1: int, m2: int) -> int:
    """Sign of reordering (gens of m1)(gens of m2) into increasing order."""
    if m1 & m2:
        return 0
    swaps = 0
    b = m2
    while b:
        low = b & -b
        swaps += bin(m1 & ~((low << 1) - 1)).count("1")
        b ^= low
    return -1 if swaps % 2 else 1


def _popcount(m):
    return bin(m).count("1")


# --------------------------------------------------------------------------
# coefficient backends

class GridBackend:
    """Coefficients sampled on a grid; derivatives by central differences."""

    kind = "grid"

    def __init__(self, domain: GridDomain):
        self.domain = domain
        self.pshape = (domain.nx, domain.ny)

    def coords(self):
        return self.domain.mesh()

    def product(self, a, b, spec):
        if spec:
            return np.einsum(f"...{spec[0]},...{spec[1]}->...{spec[2]}", a, b)
        nd = max(a.ndim, b.ndim)
        return a.reshape(a.shape + (1,) * (nd - a.ndim)) * b.reshape(b.shape + (1,) * (nd - b.ndim))

    def scalar_mul(self, s, a):
        return s.reshape(s.shape + (1,) * (a.ndim - s.ndim)) * a

    def power(self, a, r):
        return np.asarray(a, dtype=complex) ** r if np.iscomplexobj(a) else a**r

    def body_value(self, a):
        return a

    def constant(self, value):
        value = np.asarray(value)
        return np.broadcast_to(value, self.pshape + value.shape).astype(np.result_type(value, float))

    def dz(self, a):
        return d_dz(a, self.domain)

    def dzbar(self, a):
        return d_dzbar(a, self.domain)

    def norm(self, a, depth=0):
        return sup_norm(a) if a.ndim >= 2 else float(np.nanmax(np.abs(a)))


class PointBackend(GridBackend):
    """Constant coefficients over a list of samples (e.g. lambda values)."""

    kind = "point"

    def __init__(self, n: int):
        self.domain = None
        self.pshape = (n,)

    def coords(self):
        raise GrassmannError("point backend has no coordinates")

    def dz(self, a):
        raise GrassmannError("point backend has no derivatives")

    dzbar = dz

    def norm(self, a, depth=0):
        a = np.abs(a).reshape(a.shape[0], -1)
        return float(np.max(np.sqrt(np.sum(a**2, axis=1))))


class JetBackend:
    """Truncated Taylor jets of total degree <= K about M base points.

    A coefficient array has shape (M, C, *value) with C monomials s^p t^q in
    the local offsets.  Products and derivatives are exact in the truncated
    ring; a quantity involving d derivatives is reliable up to degree K - d.
    """

    kind = "jet"

    def __init__(self, points, K=6):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.K = K
        self.monos = [(p, d - p) for d in range(K + 1) for p in range(d, -1, -1)]
        idx = {m: n for n, m in enumerate(self.monos)}
        C = len(self.monos)
        T = np.zeros((C, C, C))
        Dx = np.zeros((C, C))
        Dy = np.zeros((C, C))
        for a, (p1, q1) in enumerate(self.monos):
            for b, (p2, q2) in enumerate(self.monos):
                c = idx.get((p1 + p2, q1 + q2))
                if c is not None:
                    T[a, b, c] = 1.0
            if p1 > 0:
                Dx[idx[(p1 - 1, q1)], a] = p1
            if q1 > 0:
                Dy[idx[(p1, q1 - 1)], a] = q1
        self.T, self.Dx, self.Dy = T, Dx, Dy
        self.degree = np.array([p + q for p, q in self.monos])
        self.pshape = (len(self.points), C)

    # ring structure
    def product(self, a, b, spec):
        if spec:
            return np.einsum(f"mA{spec[0]},mB{spec[1]},ABC->mC{spec[2]}", a, b, self.T, optimize=True)
        return np.einsum("mA...,mB...,ABC->mC...", a, b, self.T, optimize=True)

    def scalar_mul(self, s, a):
        s = s.reshape(s.shape + (1,) * (a.ndim - s.ndim))
        return self.product(np.broadcast_to(s, s.shape[:2] + a.shape[2:]), a, None)

    def coords(self):
        C = self.pshape[1]
        x = np.zeros(self.pshape)
        y = np.zeros(self.pshape)
        x[:, 0], y[:, 0] = self.points[:, 0], self.points[:, 1]
        x[:, self.monos.index((1, 0))] = 1.0
        y[:, self.monos.index((0, 1))] = 1.0
        return x, y

    def compose(self, a, derivs):
        """f(a) from the list f^(k)(body(a)), k = 0..K (arrays over M)."""
        body = a[:, :1]
        nil = a.copy()
        nil[:, 0] = 0
        out = np.zeros(a.shape, dtype=np.result_type(a, *derivs))
        term = np.zeros_like(out)
        term[:, 0] = 1.0
        fact = 1.0
        for k in range(self.K + 1):
            out = out + derivs[k][:, None] / fact * term
            term = self.product(term, nil, None)
            fact *= k + 1
        return out

    def power(self, a, r):
        b = a[:, 0]
        if np.any(b == 0):
            raise GrassmannError("jet body vanishes")
        derivs = [_falling(r, k) * b ** (r - k) for k in range(self.K + 1)]
        return self.compose(a, derivs)

    def body_value(self, a):
        return a[:, 0]

    def constant(self, value):
        value = np.asarray(value)
        out = np.zeros(self.pshape + value.shape, dtype=np.result_type(value, float))
        out[:, 0] = value
        return out

    def dz(self, a):
        return 0.5 * (np.einsum("AB,mB...->mA...", self.Dx, a) - 1j * np.einsum("AB,mB...->mA...", self.Dy, a))

    def dzbar(self, a):
        return 0.5 * (np.einsum("AB,mB...->mA...", self.Dx, a) + 1j * np.einsum("AB,mB...->mA...", self.Dy, a))

    def norm(self, a, depth=0):
        keep = self.degree <= self.K - depth
        return float(np.max(np.abs(a[:, keep]))) if a.size else 0.0


def _falling(r, k):
    out = 1.0
    for j in range(k):
        out *= r - j
    return out


def comb_real(r, k):
    return _falling(r, k) / factorial(k)


# --------------------------------------------------------------------------
# elements

class GElem:
    """Element of the Grassmann algebra over a coefficient backend."""

    __array_priority__ = 100

    def __init__(self, backend, terms: dict, vshape=()):
        self.backend = backend
        self.vshape = tuple(vshape)
        self.terms = {}
        for m, c in terms.items():
            c = np.asarray(c)
            if c.shape != backend.pshape + self.vshape:
                raise GrassmannError(f"coefficient shape {c.shape} != {backend.pshape + self.vshape}")
            self.terms[int(m)] = c

    # construction
    @classmethod
    def even(cls, backend, value):
        value = np.asarray(value)
        return cls(backend, {0: value}, value.shape[len(backend.pshape):])

    @classmethod
    def generator(cls, backend, k, coefficient=1.0):
        return cls(backend, {1 << k: backend.constant(coefficient)})

    @classmethod
    def zero(cls, backend, vshape=()):
        return cls(backend, {}, vshape)

    # grading
    def parity(self):
        ps = {_popcount(m) % 2 for m in self.terms}
        if len(ps) > 1:
            raise GrassmannError("element has mixed parity")
        return ps.pop() if ps else 0

    def is_homogeneous(self):
        return len({_popcount(m) % 2 for m in self.terms}) <= 1

    def body(self):
        if 0 in self.terms:
            return self.terms[0]
        return np.zeros(self.backend.pshape + self.vshape)

    def nilpotent(self):
        return GElem(self.backend, {m: c for m, c in self.terms.items() if m}, self.vshape)

    # linear structure
    def _check(self, other):
        if other.backend is not self.backend:
            raise GrassmannError("elements live over different backends")

    def __add__(self, other):
        if not isinstance(other, GElem):
            return self + GElem.even(self.backend, self.backend.constant(other) + 0 * self.body())
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        vshape = np.broadcast_shapes(self.vshape, other.vshape)
        return GElem(self.backend, {m: np.broadcast_to(c, self.backend.pshape + vshape) for m, c in out.items()},
                     vshape)

    __radd__ = __add__

    def __neg__(self):
        return GElem(self.backend, {m: -c for m, c in self.terms.items()}, self.vshape)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GElem):
            return g_mul(self, other)
        return GElem(self.backend, {m: c * other for m, c in self.terms.items()}, self.vshape)

    def __rmul__(self, other):
        return GElem(self.backend, {m: other * c for m, c in self.terms.items()}, self.vshape)

    def __truediv__(self, other):
        return self * (1.0 / other)

    def map_coeffs(self, fn, vshape=None):
        terms = {m: fn(c) for m, c in self.terms.items()}
        if vshape is None:
            vshape = next(iter(terms.values())).shape[len(self.backend.pshape):] if terms else self.vshape
        return GElem(self.backend, terms, vshape)

    def conj(self):
        """Coefficient-wise complex conjugation (generators are real)."""
        return GElem(self.backend, {m: np.conj(c) for m, c in self.terms.items()}, self.vshape)

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        np_ = len(self.backend.pshape)
        full = (slice(None),) * np_ + idx
        terms = {m: c[full] for m, c in self.terms.items()}
        probe = np.empty(self.vshape)[idx]
        return GElem(self.backend, terms, probe.shape)

    @property
    def T(self):
        return self.map_coeffs(lambda c: np.swapaxes(c, -1, -2), self.vshape[::-1])

    def prune(self, tol=0.0):
        return GElem(self.backend, {m: c for m, c in self.terms.items() if np.any(np.abs(c) > tol)},
                     self.vshape)

    def norm(self, depth=0):
        """Max over monomials of the backend norm of the coefficient."""
        vals = [self.backend.norm(c, depth) for c in self.terms.values()]
        return max(vals) if vals else 0.0

    def component(self, mask):
        c = self.terms.get(mask)
        if c is None:
            return np.zeros(self.backend.pshape + self.vshape)
        return c

    # derivations
    def d_gen(self, k):
        """Left derivative with respect to generator k."""
        bit = 1 << k
        out = {}
        for m, c in self.terms.items():
            if m & bit:
                sign = -1 if _popcount(m & (bit - 1)) % 2 else 1
                out[m ^ bit] = sign * c
        return GElem(self.backend, out, self.vshape)

    def dz(self):
        return self.map_coeffs(self.backend.dz, self.vshape)

    def dzbar(self):
        return self.map_coeffs(self.backend.dzbar, self.vshape)


def g_mul(a: GElem, b: GElem, spec=None, max_generators=None) -> GElem:
    """Signed subset-merge product.

    ``spec`` = (sub_a, sub_b, sub_out) contracts value axes like einsum;
    without it value axes are multiplied elementwise (with broadcasting).
    """
    a._check(b)
    be = a.backend
    out = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            s = merge_sign(m1, m2)
            if s == 0:
                continue
            m = m1 | m2
            if max_generators is not None and m >> max_generators:
                raise GrassmannError("generator budget exceeded")
            prod = be.product(c1, c2, spec)
            out[m] = out[m] + s * prod if m in out else s * prod
    if spec:
        sizes = dict(zip(spec[0], a.vshape)) | dict(zip(spec[1], b.vshape))
        vshape = tuple(sizes[ch] for ch in spec[2])
    else:
        vshape = np.broadcast_shapes(a.vshape, b.vshape)
    return GElem(be, out, vshape)


def dot(a: GElem, b: GElem) -> GElem:
    """Bilinear <a, b> = sum_k a_k b_k (order kept)."""
    return g_mul(a, b, ("i", "i", ""))


def matmul(a: GElem, b: GElem) -> GElem:
    if len(b.vshape) == 1:
        return g_mul(a, b, ("ij", "j", "i"))
    return g_mul(a, b, ("ij", "jk", "ik"))


def scale(s: GElem, v: GElem) -> GElem:
    """Scalar element times value-shaped element (s on the left)."""
    sub = "ijkl"[: len(v.vshape)]
    return g_mul(s, v, ("", sub, sub))


def bracket(a: GElem, b: GElem) -> GElem:
    """Graded commutator AB - (-1)^{|A||B|} BA of matrix-valued elements."""
    sign = -1.0 if a.parity() * b.parity() else 1.0
    return matmul(a, b) - sign * matmul(b, a)


def even_function(s: GElem, derivs_fn, order=None) -> GElem:
    """f(s) for an even scalar element s = body + n via sum f^(k)(body) n^k / k!.

    derivs_fn(k, body) returns the backend array for f^(k)(body)/k!.
    """
    if s.vshape:
        raise GrassmannError("even_function needs a scalar element")
    if s.parity() != 0:
        raise GrassmannError("even_function needs an even element")
    n = s.nilpotent()
    body = s.body()
    be = s.backend
    out = GElem.even(be, derivs_fn(0, body))
    power = GElem.even(be, be.constant(1.0) + 0 * body)
    k = 1
    while True:
        power = power * n
        if not power.terms:
            break
        out = out + g_mul(GElem.even(be, derivs_fn(k, body)), power)
        k += 1
        if order is not None and k > order:
            break
    return out


def g_power(s: GElem, r: float) -> GElem:
    """s^r for even s with invertible body (r real)."""
    be = s.backend

    def derivs(k, body):
        return comb_real(r, k) * be.power(body, r - k)

    return even_function(s, derivs)


def g_inv(s: GElem) -> GElem:
    return g_power(s, -1.0)


def g_inv_sqrt(s: GElem) -> GElem:
    return g_power(s, -0.5)


def stack(elems, axis=-1) -> GElem:
    be = elems[0].backend
    masks = set().union(*(e.terms for e in elems))
    vshape = elems[0].vshape
    np_ = len(be.pshape)
    ax = axis if axis >= 0 else np_ + len(vshape) + 1 + axis
    terms = {m: np.stack([e.component(m) for e in elems], axis=ax) for m in masks}
    shape = list(vshape)
    shape.insert(ax - np_, len(elems))
    return GElem(be, terms, tuple(shape))


def odd_coordinates(backend):
    """(theta, thetabar, theta^1, theta^2) with theta = theta^1 + i theta^2."""
    th = GElem.generator(backend, THETA)
    thb = GElem.generator(backend, THETABAR)
    t1 = 0.5 * (th + thb)
    t2 = (th - thb) * (1 / 2j)
    assert (t1 + 1j * t2 - th).norm() == 0.0
    return th, thb, t1, t2


def D_op(phi: GElem) -> GElem:
    """D = d/dtheta - theta d/dz."""
    th = GElem.generator(phi.backend, THETA)
    return phi.d_gen(THETA) - g_mul(th, phi.dz())


def Dbar_op(phi: GElem) -> GElem:
    """Dbar = d/dthetabar - thetabar d/dzbar."""
    thb = GElem.generator(phi.backend, THETABAR)
    return phi.d_gen(THETABAR) - g_mul(thb, phi.dzbar())
