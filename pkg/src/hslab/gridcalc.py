"""Finite differences on sampled maps over a rectangular parameter domain.

Stencils are second-order central differences.  Periodic axes wrap; on
non-periodic axes the outermost ring of a derivative is set to NaN, so the
valid evaluation region shrinks by one ring per derivative and every norm
below is taken over finite entries only.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

EXACT = "exact"


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridDomain:
    nx: int
    ny: int
    hx: float
    hy: float
    x0: float = 0.0
    y0: float = 0.0
    periodic: tuple = (False, False)

    def __post_init__(self):
        if self.hx <= 0 or self.hy <= 0:
            raise GridError("grid spacings must be positive")
        if self.nx < 3 or self.ny < 3:
            raise GridError("need at least 3 samples per axis")
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @classmethod
    def box(cls, n, xlim, ylim, periodic=(False, False), ny=None):
        """Grid on [x0,x1] x [y0,y1]; periodic axes exclude the right end."""
        ny = n if ny is None else ny
        (xa, xb), (ya, yb) = xlim, ylim
        hx = (xb - xa) / (n if periodic[0] else n - 1)
        hy = (yb - ya) / (ny if periodic[1] else ny - 1)
        return cls(n, ny, hx, hy, xa, ya, tuple(periodic))

    @property
    def x(self):
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def h(self):
        return max(self.hx, self.hy)

    def open(self) -> "GridDomain":
        """Same samples, every axis treated as non-periodic."""
        return replace(self, periodic=(False, False))


@dataclass(frozen=True)
class GridMap:
    """Values of shape (nx, ny, *value_shape) on a GridDomain."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[:2] != (self.domain.nx, self.domain.ny):
            raise GridError(f"values shape {v.shape} does not match grid {(self.domain.nx, self.domain.ny)}")
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "GridMap":
        return GridMap(self.domain, values)

    @classmethod
    def sample(cls, domain: GridDomain, fn) -> "GridMap":
        x, y = domain.mesh()
        return cls(domain, np.asarray(fn(x, y)))


def _as_arrays(f, domain):
    if isinstance(f, GridMap):
        return f.values, f.domain
    if domain is None:
        raise GridError("a GridDomain is required for raw arrays")
    return np.asarray(f), domain


def _wrap(out, like):
    return like.with_values(out) if isinstance(like, GridMap) else out


def _diff(v, axis, h, periodic, order):
    if order == 1:
        if periodic:
            return (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2 * h)
        out = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
        sl = [slice(None)] * v.ndim
        lo, mid, hi = list(sl), list(sl), list(sl)
        lo[axis], mid[axis], hi[axis] = slice(None, -2), slice(1, -1), slice(2, None)
        out[tuple(mid)] = (v[tuple(hi)] - v[tuple(lo)]) / (2 * h)
        return out
    if periodic:
        return (np.roll(v, -1, axis) - 2 * v + np.roll(v, 1, axis)) / h**2
    out = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
    sl = [slice(None)] * v.ndim
    lo, mid, hi = list(sl), list(sl), list(sl)
    lo[axis], mid[axis], hi[axis] = slice(None, -2), slice(1, -1), slice(2, None)
    out[tuple(mid)] = (v[tuple(hi)] - 2 * v[tuple(mid)] + v[tuple(lo)]) / h**2
    return out


def d_dx(f, domain=None):
    v, d = _as_arrays(f, domain)
    return _wrap(_diff(v, 0, d.hx, d.periodic[0], 1), f)


def d_dy(f, domain=None):
    v, d = _as_arrays(f, domain)
    return _wrap(_diff(v, 1, d.hy, d.periodic[1], 1), f)


def d_dz(f, domain=None):
    """d/dz = (d/dx - i d/dy) / 2."""
    v, d = _as_arrays(f, domain)
    out = 0.5 * (_diff(v, 0, d.hx, d.periodic[0], 1) - 1j * _diff(v, 1, d.hy, d.periodic[1], 1))
    return _wrap(out, f)


def d_dzbar(f, domain=None):
    v, d = _as_arrays(f, domain)
    out = 0.5 * (_diff(v, 0, d.hx, d.periodic[0], 1) + 1j * _diff(v, 1, d.hy, d.periodic[1], 1))
    return _wrap(out, f)


def laplacian(f, domain=None):
    """5-point Laplacian."""
    v, d = _as_arrays(f, domain)
    out = _diff(v, 0, d.hx, d.periodic[0], 2) + _diff(v, 1, d.hy, d.periodic[1], 2)
    return _wrap(out, f)


def sup_norm(v, value_axes=None):
    """Max over grid points of the pointwise Euclidean/Frobenius norm.

    NaN entries (outside the evaluation region) are ignored.
    """
    v = np.asarray(v.values if isinstance(v, GridMap) else v)
    if v.ndim > 2:
        pointwise = np.sqrt(np.sum(np.abs(v.reshape(v.shape[:2] + (-1,))) ** 2, axis=-1))
    else:
        pointwise = np.abs(v)
    finite = pointwise[np.isfinite(pointwise)]
    if finite.size == 0:
        raise GridError("empty evaluation region")
    return float(finite.max())


def finite_block(*arrays):
    """Index box of the finite samples of every array: the region left
    after the NaN border rings of non-periodic stencils."""
    ok = np.all([np.all(np.isfinite(a.reshape(a.shape[:2] + (-1,))), axis=-1) for a in arrays], axis=0)
    rows = np.flatnonzero(ok.any(axis=1))
    cols = np.flatnonzero(ok.any(axis=0))
    if rows.size == 0:
        raise GridError("no finite samples")
    block = (slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1))
    if not ok[block].all():
        raise GridError("finite samples do not form a rectangle")
    return block


def tension_sphere(n, domain=None, unit_tol=1e-8):
    """Harmonic-map tension Laplacian(n) + |dn|^2 n of a sphere-valued map,
    projected to the tangent space of the sphere."""
    v, d = _as_arrays(n, domain)
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1) > unit_tol):
        raise GridError("map is not unit-valued")
    nx = _diff(v, 0, d.hx, d.periodic[0], 1)
    ny = _diff(v, 1, d.hy, d.periodic[1], 1)
    lap = _diff(v, 0, d.hx, d.periodic[0], 2) + _diff(v, 1, d.hy, d.periodic[1], 2)
    energy = np.sum(nx**2 + ny**2, axis=-1)
    tau = lap + energy[..., None] * v
    tau = tau - np.sum(tau * v, axis=-1)[..., None] * v
    return _wrap(tau, n)


def commutator(a, b):
    return a @ b - b @ a


def curvature_residual(ax, ay, domain=None, bracket=commutator):
    """Coefficient of dx^dy in dA + [A ^ A]/2 for A = ax dx + ay dy.

    ax, ay hold matrices on their trailing two axes.
    """
    vx, d = _as_arrays(ax, domain)
    vy, _ = _as_arrays(ay, d)
    if vx.shape != vy.shape:
        raise GridError(f"mismatched connection coefficients {vx.shape} vs {vy.shape}")
    out = (_diff(vy, 0, d.hx, d.periodic[0], 1) - _diff(vx, 1, d.hy, d.periodic[1], 1)
           + bracket(vx, vy))
    return _wrap(out, ax)


def convergence_order(levels, exact_tol=1e-10):
    """Least-squares slope of log(residual) against log(h).

    ``levels`` is a sequence of (h, residual) pairs.  If every residual is
    below ``exact_tol`` the string "exact" is returned.
    """
    levels = list(levels)
    if len(levels) < 2:
        raise GridError("need at least two grid levels")
    hs = np.array([float(h) for h, _ in levels])
    rs = np.array([float(r) for _, r in levels])
    if np.all(rs <= exact_tol):
        return EXACT
    if np.any(rs <= 0):
        raise GridError("cannot take the order of a zero residual at some levels only")
    slope, _ = np.polyfit(np.log(hs), np.log(rs), 1)
    return float(slope)


def order_passes(order, minimum):
    """An "exact" outcome beats any finite order."""
    return order == EXACT or (order is not None and order >= minimum)
